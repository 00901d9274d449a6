#pragma once

#include <cstdint>
#include <vector>

#include "gmw/gwo.hpp"
#include "gmw/population.hpp"
#include "gmw/rng.hpp"

namespace gmw::meta {

struct SlpsoConfig {
    std::size_t np = 60;
    double alpha = 0.5;    // exponent factor of the rank-based learning probability
    double beta = 0.0001;  // social influence factor epsilon = beta * dim
    double pos_lo = -0.1;
    double pos_hi = 0.1;
    double vel_lo = -0.01;
    double vel_hi = 0.01;
};

/// Swarm state for social-learning PSO. learning_probabilities[k] belongs to
/// the particle at worst-to-best rank k (k = 0 is the worst and always 1).
struct SlpsoState {
    SlpsoConfig cfg;
    std::vector<std::vector<double>> velocities;  // indexed by particle
    std::vector<double> learning_probabilities;   // indexed by rank, worst first
    double epsilon = 0.0;

    static SlpsoState init(const SlpsoConfig& cfg, std::size_t dim);
};

/// One swarm update. The swarm is ranked by fitness; the best particle is
/// left untouched. Every other particle, gated by its rank's learning
/// probability, updates each dimension against a freshly drawn better-ranked
/// demonstrator and the swarm mean:
///   dx <- r1*dx + r2*(x_demo - x) + r3*epsilon*(mean - x)
/// with dx clamped to the velocity bounds before the position moves.
/// Positions and demonstrators come from a snapshot taken at entry.
void slpso_step(Population& pop, SlpsoState& state, RngStream& rng);

struct SlpsoOptions {
    SlpsoConfig cfg;
    std::size_t iterations = 100;
};

/// Plain SL-PSO minimization of a black-box function.
OptTrace minimize_slpso(const ObjectiveFn& fn, std::size_t dim, const SlpsoOptions& opts,
                        std::uint64_t seed);

}  // namespace gmw::meta
