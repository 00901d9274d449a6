#pragma once

#include <limits>
#include <span>

#include "gmw/population.hpp"
#include "gmw/rng.hpp"

namespace gmw::meta {

/// Stall tracking plus the knobs of the patience-triggered genetic events.
struct GaEventState {
    std::size_t patience = 4;
    std::size_t stall_counter = 0;
    double best_omega_fitness_seen = std::numeric_limits<double>::infinity();

    double p_mut = 0.7;   // probability the event mutates instead of crossing over
    double eta_m = 20.0;  // polynomial-mutation distribution index, [20, 100]
    double rate_worst = 0.6;
    double rate_best = 0.1;
    double x_lower = -1.0;
    double x_upper = 1.0;

    std::size_t clamped_genes = 0;  // genes pulled back into bounds before mutation
};

/// Feeds one observation of the best omega fitness into the stall counter.
/// Returns true on strict improvement (counter resets), false otherwise
/// (counter increments).
bool note_omega_fitness(GaEventState& ga, double best_omega_fitness);

/// Polynomial mutation of a single bounded gene for draw u in [0,1]:
///   u <= 0.5:  p + ((2u)^(1/(1+eta)) - 1) * (p - lo)
///   u  > 0.5:  p + (1 - (2(1-u))^(1/(1+eta))) * (hi - p)
/// The result never leaves [lo, hi].
double mutate_gene(double p, double u, double eta_m, double lo, double hi);

/// Mutates each gene independently with probability rate. Genes found
/// outside [x_lower, x_upper] are clamped first and counted in
/// ga.clamped_genes. Fitness is cleared.
void polynomial_mutation(Individual& ind, double rate, GaEventState& ga, RngStream& rng);

/// Uniform gene-mask crossover: each gene is taken from the dominant parent
/// with probability rate, otherwise kept. The dominant parent is untouched;
/// the omega's fitness is cleared.
void crossover_with_dominant(Individual& omega, const Individual& dominant, double rate,
                             RngStream& rng);

enum class GaEventKind { mutation, crossover };

struct GaEventReport {
    GaEventKind kind = GaEventKind::mutation;
    std::vector<std::size_t> omega_order;  // worst to best
    std::vector<double> rates;             // aligned with omega_order
};

/// Patience-triggered population event. One draw against p_mut picks the
/// event type; it is then applied to every omega with a per-individual rate
/// interpolated linearly from rate_worst (worst omega) to rate_best (best
/// omega). Crossover partners are drawn uniformly from the dominant wolves.
/// Dominant wolves are never modified; the stall counter resets.
/// Must only be called once stall_counter >= patience.
GaEventReport ga_event(Population& pop, const WolfHierarchy& hier, GaEventState& ga,
                       RngStream& rng);

/// Same event, but with the omega worst-to-best ordering supplied by the
/// caller (used by the bi-objective loop, whose ordering is not a plain
/// fitness sort).
GaEventReport ga_event_ordered(Population& pop, const WolfHierarchy& hier,
                               std::span<const std::size_t> omegas_worst_to_best,
                               GaEventState& ga, RngStream& rng);

}  // namespace gmw::meta
