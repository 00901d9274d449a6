#pragma once

#include <cstdint>
#include <random>

namespace gmw {

/// Deterministic random stream. The same seed yields the same draw sequence
/// on every platform: mt19937_64 is fully specified by the standard and the
/// bit-to-double mapping below avoids std::uniform_real_distribution, whose
/// output is implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform index in {0, ..., n-1}; n must be positive.
    std::size_t uniform_index(std::size_t n);

    /// Standard normal via the polar (Marsaglia) method.
    double normal();

    /// Independent child stream; distinct ids give decorrelated sequences
    /// and the same (seed, id) pair always gives the same child.
    RngStream substream(std::uint64_t id) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 mixing step; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace gmw
