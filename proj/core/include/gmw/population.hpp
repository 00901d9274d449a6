#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace gmw::meta {

/// One search point in flat parameter space. fitness is the minimized
/// objective; it is cleared whenever the position moves. accuracy rides
/// along for logging and is meaningless for plain benchmark functions.
struct Individual {
    std::vector<double> position;
    std::optional<double> fitness;
    std::optional<double> accuracy;
};

using Population = std::vector<Individual>;

/// Dominant wolves (the three lowest-fitness individuals, strictly ordered)
/// plus the remaining omega indices in ascending order.
struct WolfHierarchy {
    std::size_t alpha = 0;
    std::size_t beta = 0;
    std::size_t delta = 0;
    std::vector<std::size_t> omegas;

    bool is_dominant(std::size_t i) const { return i == alpha || i == beta || i == delta; }
};

}  // namespace gmw::meta
