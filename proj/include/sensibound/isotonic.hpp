#pragma once

#include <vector>

namespace sensibound {

/// Weighted least-squares isotonic fit by pool-adjacent-violators.
/// Empty weights means unit weights.
std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& weights = {},
                                 bool increasing = true);

}  // namespace sensibound
