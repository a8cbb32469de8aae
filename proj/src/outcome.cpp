#include "sensibound/outcome.hpp"

#include <cmath>

#include "sensibound/errors.hpp"

namespace sensibound {

double OutcomeCurve::operator()(double u) const {
  if (linear()) return offset + slope * (u - shift);
  return offset + slope * saturation * std::tanh((u - shift) / saturation);
}

double OutcomeCurve::derivative(double u) const {
  if (linear()) return slope;
  const double c = std::cosh((u - shift) / saturation);
  return slope / (c * c);
}

double OutcomeCurve::value_and_derivative(double u, double& dfdu) const {
  if (linear()) {
    dfdu = slope;
    return offset + slope * (u - shift);
  }
  const double t = std::tanh((u - shift) / saturation);
  dfdu = slope * (1.0 - t * t);
  return offset + slope * saturation * t;
}

double OutcomeCurve::inverse(double y) const {
  if (slope == 0.0) throw DomainError("outcome is constant in u; inverse undefined");
  if (!std::isfinite(y)) throw DomainError("outcome inverse requires a finite value");
  if (linear()) return shift + (y - offset) / slope;
  const double t = (y - offset) / (slope * saturation);
  if (!(std::abs(t) < 1.0)) throw DomainError("value lies outside the image of the outcome map");
  return shift + saturation * std::atanh(t);
}

double OutcomeCurve::sup() const {
  if (slope == 0.0) return offset;
  if (linear()) return std::numeric_limits<double>::infinity();
  return offset + std::abs(slope) * saturation;
}

double OutcomeCurve::inf() const {
  if (slope == 0.0) return offset;
  if (linear()) return -std::numeric_limits<double>::infinity();
  return offset - std::abs(slope) * saturation;
}

}  // namespace sensibound
