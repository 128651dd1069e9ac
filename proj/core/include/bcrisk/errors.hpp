#pragma once

#include <stdexcept>
#include <string>

namespace bcrisk {

/// Malformed or inconsistent input data (bad CSV row, unknown stage token,
/// empty cohort, shape mismatch, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure (singular information matrix, NaN loss, degenerate
/// quartiles, no valid spacing, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bcrisk
