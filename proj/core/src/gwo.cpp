#include "gmw/gwo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmw/errors.hpp"

namespace gmw::meta {

double compute_a(std::size_t t, const GwoSchedule& schedule) {
    if (schedule.total_steps == 0) throw UsageError("compute_a: total_steps must be positive");
    if (t > schedule.total_steps)
        throw UsageError("compute_a: step " + std::to_string(t) + " beyond total " +
                         std::to_string(schedule.total_steps));
    return schedule.a_start + (schedule.a_end - schedule.a_start) *
                                  (static_cast<double>(t) /
                                   static_cast<double>(schedule.total_steps));
}

WolfHierarchy update_hierarchy(const Population& pop) {
    if (pop.size() < 4)
        throw UsageError("update_hierarchy: need at least 4 individuals, have " +
                         std::to_string(pop.size()));
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (!pop[i].fitness)
            throw UsageError("update_hierarchy: individual " + std::to_string(i) +
                             " has no fitness");

    // three minima with lower-index tie-break
    auto better = [&](std::size_t a, std::size_t b) {
        if (*pop[a].fitness != *pop[b].fitness) return *pop[a].fitness < *pop[b].fitness;
        return a < b;
    };
    std::vector<std::size_t> idx(pop.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(), better);

    WolfHierarchy h;
    h.alpha = idx[0];
    h.beta = idx[1];
    h.delta = idx[2];
    h.omegas.assign(idx.begin() + 3, idx.end());
    std::sort(h.omegas.begin(), h.omegas.end());
    return h;
}

double gwo_candidate(double x, double x_leader, double a, double r1, double r2) {
    const double A = 2.0 * a * r1 - a;
    const double C = 2.0 * r2;
    const double D = std::abs(C * x_leader - x);
    return x_leader - A * D;
}

void gwo_step(Population& pop, const WolfHierarchy& hier, double a, RngStream& rng) {
    if (a < 0.0) throw UsageError("gwo_step: a must be non-negative");
    const std::size_t dim = pop[hier.alpha].position.size();
    const std::size_t leaders[3] = {hier.alpha, hier.beta, hier.delta};

    std::vector<double> next(dim);
    for (std::size_t w : hier.omegas) {
        Individual& wolf = pop[w];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t leader : leaders) {
            const std::vector<double>& lp = pop[leader].position;
            for (std::size_t j = 0; j < dim; ++j) {
                const double r1 = rng.uniform();
                const double r2 = rng.uniform();
                next[j] += gwo_candidate(wolf.position[j], lp[j], a, r1, r2);
            }
        }
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = next[j] / 3.0;
            if (!std::isfinite(v))
                throw NumericError("gwo_step: non-finite position at dimension " +
                                   std::to_string(j));
            wolf.position[j] = v;
        }
        wolf.fitness.reset();
        wolf.accuracy.reset();
    }
}

OptTrace minimize_gwo(const ObjectiveFn& fn, std::size_t dim, const GwoOptions& opts,
                      std::uint64_t seed) {
    if (opts.np < 4) throw UsageError("minimize_gwo: population must hold at least 4 wolves");
    RngStream rng(seed);
    Population pop(opts.np);
    for (auto& ind : pop) {
        ind.position.resize(dim);
        for (double& x : ind.position) x = rng.uniform(opts.init_lo, opts.init_hi);
        ind.fitness = fn(ind.position);
    }

    OptTrace trace;
    trace.best_fitness = std::numeric_limits<double>::infinity();
    auto record_best = [&](const Individual& ind) {
        if (*ind.fitness < trace.best_fitness) {
            trace.best_fitness = *ind.fitness;
            trace.best_position = ind.position;
        }
    };
    for (const auto& ind : pop) record_best(ind);

    GwoSchedule schedule{opts.a_start, opts.a_end, opts.iterations};
    for (std::size_t t = 0; t < opts.iterations; ++t) {
        const WolfHierarchy hier = update_hierarchy(pop);
        gwo_step(pop, hier, compute_a(t, schedule), rng);
        for (auto& ind : pop) {
            if (!ind.fitness) ind.fitness = fn(ind.position);
            record_best(ind);
        }
        trace.best_history.push_back(trace.best_fitness);
    }
    return trace;
}

}  // namespace gmw::meta
