#include "gmw/slpso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmw/errors.hpp"

namespace gmw::meta {

SlpsoState SlpsoState::init(const SlpsoConfig& cfg, std::size_t dim) {
    if (cfg.np < 2) throw UsageError("slpso: swarm needs at least 2 particles");
    if (!(cfg.pos_lo < cfg.pos_hi) || !(cfg.vel_lo < cfg.vel_hi))
        throw UsageError("slpso: malformed position or velocity bounds");
    SlpsoState s;
    s.cfg = cfg;
    s.velocities.assign(cfg.np, std::vector<double>(dim, 0.0));
    s.epsilon = cfg.beta * static_cast<double>(dim);
    const double m = static_cast<double>(cfg.np);
    const double expo =
        cfg.alpha * std::log(std::ceil(static_cast<double>(dim) / 100.0));
    s.learning_probabilities.resize(cfg.np);
    for (std::size_t k = 0; k < cfg.np; ++k) {
        // rank k from the worst: P = (1 - k/m)^expo; the worst learns always
        s.learning_probabilities[k] = std::pow(1.0 - static_cast<double>(k) / m, expo);
    }
    return s;
}

void slpso_step(Population& pop, SlpsoState& state, RngStream& rng) {
    const std::size_t m = pop.size();
    if (m < 2) throw UsageError("slpso_step: swarm needs at least 2 particles");
    if (m != state.velocities.size())
        throw DimensionError("slpso_step: state sized for a different swarm");
    for (std::size_t i = 0; i < m; ++i)
        if (!pop[i].fitness)
            throw UsageError("slpso_step: particle " + std::to_string(i) + " has no fitness");

    const std::size_t dim = pop[0].position.size();

    // snapshot: ranking, positions and swarm mean all refer to entry state
    std::vector<std::size_t> worst_to_best(m);
    std::iota(worst_to_best.begin(), worst_to_best.end(), 0);
    std::sort(worst_to_best.begin(), worst_to_best.end(), [&](std::size_t a, std::size_t b) {
        if (*pop[a].fitness != *pop[b].fitness) return *pop[a].fitness > *pop[b].fitness;
        return a < b;
    });
    std::vector<std::vector<double>> snapshot(m);
    for (std::size_t i = 0; i < m; ++i) snapshot[i] = pop[i].position;
    std::vector<double> mean(dim, 0.0);
    for (const auto& x : snapshot)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += x[j];
    for (double& v : mean) v /= static_cast<double>(m);

    for (std::size_t k = 0; k + 1 < m; ++k) {  // worst to second best; best is exempt
        const std::size_t i = worst_to_best[k];
        if (rng.uniform() > state.learning_probabilities[k]) continue;
        Individual& particle = pop[i];
        std::vector<double>& vel = state.velocities[i];
        const std::size_t better = m - 1 - k;
        for (std::size_t j = 0; j < dim; ++j) {
            const std::size_t demo = worst_to_best[k + 1 + rng.uniform_index(better)];
            const double r1 = rng.uniform();
            const double r2 = rng.uniform();
            const double r3 = rng.uniform();
            double dx = r1 * vel[j] + r2 * (snapshot[demo][j] - snapshot[i][j]) +
                        r3 * state.epsilon * (mean[j] - snapshot[i][j]);
            dx = std::clamp(dx, state.cfg.vel_lo, state.cfg.vel_hi);
            vel[j] = dx;
            particle.position[j] += dx;
        }
        particle.fitness.reset();
        particle.accuracy.reset();
    }
}

OptTrace minimize_slpso(const ObjectiveFn& fn, std::size_t dim, const SlpsoOptions& opts,
                        std::uint64_t seed) {
    RngStream rng(seed);
    SlpsoState state = SlpsoState::init(opts.cfg, dim);
    Population pop(opts.cfg.np);
    for (auto& ind : pop) {
        ind.position.resize(dim);
        for (double& x : ind.position) x = rng.uniform(opts.cfg.pos_lo, opts.cfg.pos_hi);
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

    for (std::size_t t = 0; t < opts.iterations; ++t) {
        slpso_step(pop, state, rng);
        for (auto& ind : pop) {
            if (!ind.fitness) ind.fitness = fn(ind.position);
            record_best(ind);
        }
        trace.best_history.push_back(trace.best_fitness);
    }
    return trace;
}

}  // namespace gmw::meta
