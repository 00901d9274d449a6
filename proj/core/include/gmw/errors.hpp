#pragma once

#include <stdexcept>
#include <string>

namespace gmw {

/// Caller broke a documented precondition (bad argument, wrong call order).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Tensor/vector shapes do not line up.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A computation produced or received a non-finite value.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A data file is missing, truncated, or corrupt.
struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A run configuration failed validation.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gmw
