#pragma once

#include <span>
#include <vector>

namespace bcrisk {

/// Linear-interpolation quantile on a sorted sample (R type 7 / numpy
/// default): h = (n-1)p, interpolate between the two bracketing order
/// statistics. p is clamped to [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Convenience overload: copies and sorts the sample first.
double quantile(std::span<const double> values, double p);

/// Median via quantile(values, 0.5).
double median(std::span<const double> values);

}  // namespace bcrisk
