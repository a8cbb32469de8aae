#include "sensibound/aggregate.hpp"

#include "sensibound/errors.hpp"

namespace sensibound {

namespace {

Bounds mean_interval(const std::vector<Bounds>& v) {
  if (v.empty()) throw InputError("cannot aggregate an empty list of bounds");
  Bounds out;
  for (const auto& b : v) {
    out.lower += b.lower;
    out.upper += b.upper;
  }
  out.lower /= static_cast<double>(v.size());
  out.upper /= static_cast<double>(v.size());
  return out;
}

}  // namespace

Bounds cate_bounds(double lower0, double upper0, double lower1, double upper1) {
  if (!(lower0 <= upper0) || !(lower1 <= upper1)) throw InputError("each arm's bounds must satisfy lower <= upper");
  return {lower1 - upper0, upper1 - lower0};
}

Bounds apo_bounds(const std::vector<Bounds>& per_x) { return mean_interval(per_x); }
Bounds ate_bounds(const std::vector<Bounds>& per_x_cate) { return mean_interval(per_x_cate); }

}  // namespace sensibound
