#pragma once

#include <vector>

#include "sensibound/oracles.hpp"

namespace sensibound {

/// CATE interval from per-arm CAPO intervals: (l1 - u0, u1 - l0).
Bounds cate_bounds(double lower0, double upper0, double lower1, double upper1);
/// Component-wise means of per-covariate intervals.
Bounds apo_bounds(const std::vector<Bounds>& per_x);
Bounds ate_bounds(const std::vector<Bounds>& per_x_cate);

}  // namespace sensibound
