#include "gmw/genetic.hpp"

#include <algorithm>
#include <cmath>

#include "gmw/errors.hpp"

namespace gmw::meta {

bool note_omega_fitness(GaEventState& ga, double best_omega_fitness) {
    if (best_omega_fitness < ga.best_omega_fitness_seen) {
        ga.best_omega_fitness_seen = best_omega_fitness;
        ga.stall_counter = 0;
        return true;
    }
    ++ga.stall_counter;
    return false;
}

double mutate_gene(double p, double u, double eta_m, double lo, double hi) {
    const double e = 1.0 / (1.0 + eta_m);
    double next;
    if (u <= 0.5) {
        next = p + (std::pow(2.0 * u, e) - 1.0) * (p - lo);
    } else {
        next = p + (1.0 - std::pow(2.0 * (1.0 - u), e)) * (hi - p);
    }
    return std::clamp(next, lo, hi);
}

void polynomial_mutation(Individual& ind, double rate, GaEventState& ga, RngStream& rng) {
    if (!(ga.x_lower < ga.x_upper))
        throw UsageError("polynomial_mutation: x_lower must be below x_upper");
    for (double& gene : ind.position) {
        if (gene < ga.x_lower || gene > ga.x_upper) {
            gene = std::clamp(gene, ga.x_lower, ga.x_upper);
            ++ga.clamped_genes;
        }
        if (rng.uniform() < rate)
            gene = mutate_gene(gene, rng.uniform(), ga.eta_m, ga.x_lower, ga.x_upper);
    }
    ind.fitness.reset();
    ind.accuracy.reset();
}

void crossover_with_dominant(Individual& omega, const Individual& dominant, double rate,
                             RngStream& rng) {
    if (omega.position.size() != dominant.position.size())
        throw DimensionError("crossover: parents have different dimensionality");
    for (std::size_t j = 0; j < omega.position.size(); ++j)
        if (rng.uniform() < rate) omega.position[j] = dominant.position[j];
    omega.fitness.reset();
    omega.accuracy.reset();
}

GaEventReport ga_event(Population& pop, const WolfHierarchy& hier, GaEventState& ga,
                       RngStream& rng) {
    // worst first: higher fitness, ties to the lower index
    std::vector<std::size_t> order(hier.omegas.begin(), hier.omegas.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (!pop[a].fitness || !pop[b].fitness)
            throw UsageError("ga_event: omega fitness not evaluated");
        if (*pop[a].fitness != *pop[b].fitness) return *pop[a].fitness > *pop[b].fitness;
        return a < b;
    });
    return ga_event_ordered(pop, hier, order, ga, rng);
}

GaEventReport ga_event_ordered(Population& pop, const WolfHierarchy& hier,
                               std::span<const std::size_t> omegas_worst_to_best,
                               GaEventState& ga, RngStream& rng) {
    if (ga.stall_counter < ga.patience)
        throw UsageError("ga_event: triggered below patience (stall " +
                         std::to_string(ga.stall_counter) + " < " +
                         std::to_string(ga.patience) + ")");

    GaEventReport report;
    report.kind = rng.uniform() < ga.p_mut ? GaEventKind::mutation : GaEventKind::crossover;
    report.omega_order.assign(omegas_worst_to_best.begin(), omegas_worst_to_best.end());

    const std::size_t n = report.omega_order.size();
    const std::size_t leaders[3] = {hier.alpha, hier.beta, hier.delta};
    for (std::size_t k = 0; k < n; ++k) {
        // exact endpoints: the worst omega uses rate_worst, the best rate_best
        const double rate =
            k + 1 == n && n > 1
                ? ga.rate_best
                : ga.rate_worst + (ga.rate_best - ga.rate_worst) *
                                      (n > 1 ? static_cast<double>(k) /
                                                   static_cast<double>(n - 1)
                                             : 0.0);
        report.rates.push_back(rate);
        Individual& omega = pop[report.omega_order[k]];
        if (report.kind == GaEventKind::mutation) {
            polynomial_mutation(omega, rate, ga, rng);
        } else {
            crossover_with_dominant(omega, pop[leaders[rng.uniform_index(3)]], rate, rng);
        }
    }
    ga.stall_counter = 0;
    return report;
}

}  // namespace gmw::meta
