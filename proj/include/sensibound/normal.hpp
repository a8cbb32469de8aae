#pragma once

#include <cmath>
#include <numbers>

namespace sensibound::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }
inline double pdf(double x) { return std::exp(log_pdf(x)); }
inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal quantile for p in (0, 1). Wichura's AS241 followed by one
/// Newton step; absolute error is at the level of double rounding.
double quantile(double p);

}  // namespace sensibound::normal
