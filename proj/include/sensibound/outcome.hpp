#pragma once

#include <limits>

namespace sensibound {

/// Outcome as a function of the latent u for one fixed (x, a):
///   f(u) = offset + slope * L * tanh((u - shift) / L)   (saturating, L finite)
///   f(u) = offset + slope * (u - shift)                  (linear, L = inf)
/// Prior-sampled curves have slope > 0; tests also use slope <= 0.
struct OutcomeCurve {
  double offset = 0.0;
  double slope = 1.0;
  double shift = 0.0;
  double saturation = std::numeric_limits<double>::infinity();

  static OutcomeCurve constant(double c) { return {c, 0.0, 0.0, std::numeric_limits<double>::infinity()}; }
  static OutcomeCurve identity() { return {}; }

  bool linear() const { return !(saturation < std::numeric_limits<double>::infinity()); }

  double operator()(double u) const;
  double derivative(double u) const;
  /// Value and derivative in one evaluation.
  double value_and_derivative(double u, double& dfdu) const;
  /// Inverse map; y outside the open image throws DomainError.
  double inverse(double y) const;
  /// Supremum / infimum over the real line (may be +-inf for linear curves).
  double sup() const;
  double inf() const;

  OutcomeCurve negated() const { return {-offset, -slope, shift, saturation}; }
};

}  // namespace sensibound
