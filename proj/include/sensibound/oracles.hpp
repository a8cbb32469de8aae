#pragma once

#include <utility>
#include <vector>

#include "sensibound/gtsm.hpp"
#include "sensibound/prior.hpp"

namespace sensibound {

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// No-assumption limits: the unobserved arm may put all its mass at the
/// extremes of f over u in [-8, 8].
Bounds manski_bounds(const QueryContext& ctx);
Bounds manski_bounds(const StructuralCausalModel& scm, const QueryPoint& q, int k,
                     const LatentSampler& sampler);

/// Quantile level of the outcome threshold: G/(G+1) for the upper bound,
/// 1/(G+1) for the lower bound.
double msm_threshold_level(double gamma, bool upper);

/// Sorted outcome draws with prefix sums; answers closed-form MSM bounds for
/// many sensitivity levels at O(1) each.
class MsmClosedForm {
 public:
  MsmClosedForm(const QueryContext& ctx, int k, const LatentSampler& sampler);
  Bounds operator()(double gamma) const;
  double q0() const { return q0_; }

 private:
  double arm_bound(double gamma, bool upper) const;

  QueryContext ctx_;
  std::vector<double> f_;       // ascending
  std::vector<double> prefix_;  // prefix_[i] = sum of f_[0..i)
  double q0_ = 0.0;
};

Bounds msm_closed_form(const QueryContext& ctx, double gamma, int k, const LatentSampler& sampler);
Bounds msm_closed_form(const StructuralCausalModel& scm, const QueryPoint& q, double gamma, int k,
                       const LatentSampler& sampler);

/// Discretized forward problem over a density-ratio vector on a uniform grid
/// on [-6, 6] with normalized normal weights; Q0 is the grid estimate.
Bounds brute_force_bound(const QueryContext& ctx, const GtsmSpec& spec, double gamma, int grid_size = 2001);
Bounds brute_force_bound(const StructuralCausalModel& scm, const QueryPoint& q, const GtsmSpec& spec,
                         double gamma, int grid_size = 2001);

}  // namespace sensibound
