#pragma once

#include <span>
#include <vector>

namespace netgnn {

// 1 - SS_res / SS_tot. NaN when the targets have zero variance.
double r_squared(std::span<const double> predictions, std::span<const double> targets);
// NaN when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace netgnn
