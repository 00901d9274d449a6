#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "gmw/population.hpp"
#include "gmw/rng.hpp"

namespace gmw::meta {

/// Linear schedule for the encircling coefficient a.
struct GwoSchedule {
    double a_start = 2.0;
    double a_end = 0.0;
    std::size_t total_steps = 1;
};

/// a(t) = a_start + (a_end - a_start) * t / total_steps, 0 <= t <= total_steps.
double compute_a(std::size_t t, const GwoSchedule& schedule);

/// The three minimal-fitness individuals (ties to the lower index) plus the
/// omegas. Requires at least 4 evaluated individuals.
WolfHierarchy update_hierarchy(const Population& pop);

/// Single-dimension position candidate toward one leader:
///   A = 2*a*r1 - a, C = 2*r2, D = |C*x_leader - x|, result = x_leader - A*D.
double gwo_candidate(double x, double x_leader, double a, double r1, double r2);

/// Moves every omega to the mean of its three per-leader candidates, drawing
/// fresh r1, r2 per omega, per leader (alpha, beta, delta order), per
/// dimension. Dominant wolves do not move. Moved fitness is cleared.
void gwo_step(Population& pop, const WolfHierarchy& hier, double a, RngStream& rng);

using ObjectiveFn = std::function<double(std::span<const double>)>;

struct GwoOptions {
    std::size_t np = 30;
    std::size_t iterations = 500;
    double a_start = 2.0;
    double a_end = 0.0;
    double init_lo = -100.0;
    double init_hi = 100.0;
};

struct OptTrace {
    std::vector<double> best_position;
    double best_fitness = 0.0;
    std::vector<double> best_history;  // best-so-far after each iteration
};

/// Plain GWO minimization of a black-box function (no GA events, no SGD);
/// re-evaluates moved wolves each iteration and tracks the best ever seen.
OptTrace minimize_gwo(const ObjectiveFn& fn, std::size_t dim, const GwoOptions& opts,
                      std::uint64_t seed);

}  // namespace gmw::meta
