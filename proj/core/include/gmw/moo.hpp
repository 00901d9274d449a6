#pragma once

#include <span>
#include <vector>

#include "gmw/hybrid.hpp"
#include "gmw/population.hpp"

namespace gmw::moo {

/// Both objectives are minimized: f1 is the negated accuracy (so better
/// accuracy sorts first) and f2 the Gaussian regularizer (sum of squared
/// weights).
struct ObjectiveVector {
    double f1 = 0.0;
    double f2 = 0.0;
};

/// a dominates b iff a <= b componentwise with at least one strict component.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Partition into non-dominated fronts F0, F1, ... (indices into points).
std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    std::span<const ObjectiveVector> points);

/// NSGA-II crowding distances for one mutually non-dominating front, aligned
/// with the input order. Boundary points per objective get infinity; an
/// objective with zero range contributes nothing.
std::vector<double> crowding_distance(std::span<const ObjectiveVector> front);

struct RankedObjectives {
    std::vector<std::size_t> rank;  // front index per point, 0 = non-dominated
    std::vector<double> crowding;
};

RankedObjectives rank_and_crowd(std::span<const ObjectiveVector> points);

/// mu+lambda survivor selection: fill by ascending front, split the last
/// admitted front by descending crowding distance, ties to the lower index.
/// Returns the selected indices in selection order.
std::vector<std::size_t> select_survivors(std::span<const ObjectiveVector> combined,
                                          std::size_t np);

/// Leaders for the bi-objective loop: the top three points by
/// (ascending rank, descending crowding, ascending index).
meta::WolfHierarchy moo_leaders(std::span<const ObjectiveVector> points);

struct ParetoPoint {
    double accuracy = 0.0;  // fraction in [0, 1]
    double regularizer = 0.0;
};

struct ParetoReport {
    std::vector<ParetoPoint> representatives;  // highest crowding, distinct, at most 6
    std::vector<ParetoPoint> front;            // full front-0 dump
};

struct MooResult {
    ParetoReport report;
    hybrid::TrainLog log;
    meta::Individual best;  // highest-accuracy member of the final front
};

/// The hybrid training loop recast as a bi-objective problem: objective
/// evaluation replaces scalar fitness, moo_leaders replaces the fitness
/// hierarchy, and each generation ends with mu+lambda survivor selection
/// over parents plus the updated population.
MooResult gmw_sgd_moo_train(const hybrid::GmwConfig& cfg, const nn::NetworkSpec& spec,
                            const data::Dataset& train, const data::Dataset& test);

}  // namespace gmw::moo
