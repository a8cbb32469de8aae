#pragma once

#include <cstddef>
#include <vector>

#include "sensibound/random.hpp"

namespace sensibound {

/// Unconstrained parameters of a monotone rational-quadratic spline on [-B, B]
/// with identity tails. Flat layout: widths[n], heights[n], derivatives[n+1].
/// The two boundary derivatives are pinned to 1 so the density is continuous
/// at +-B; their entries are kept for layout compatibility and have zero gradient.
struct SplineFlowParams {
  int n_bins = 16;
  double tail_bound = 6.0;
  double min_bin_width = 1e-3;
  double min_bin_height = 1e-3;
  double min_derivative = 1e-3;
  std::vector<double> theta;

  static SplineFlowParams identity(int n_bins = 16, double tail_bound = 6.0);
  /// Identity plus N(0, scale^2) noise on every free entry.
  static SplineFlowParams random(Rng& rng, double scale, int n_bins = 16, double tail_bound = 6.0);

  std::size_t size() const { return static_cast<std::size_t>(3 * n_bins + 1); }
  double* widths() { return theta.data(); }
  double* heights() { return theta.data() + n_bins; }
  double* derivatives() { return theta.data() + 2 * n_bins; }
  const double* widths() const { return theta.data(); }
  const double* heights() const { return theta.data() + n_bins; }
  const double* derivatives() const { return theta.data() + 2 * n_bins; }

  void validate() const;
};

struct FlowEval {
  double value;     // u for the forward map, z for the inverse
  double log_abs_det;  // log |d value / d argument|
};

/// Per-sample adjoints of a scalar objective. Forward terms contribute
/// adj_u * u(z) + adj_ell * log T'(z) for a fixed base point z; inverse terms
/// contribute adj_z * T^{-1}(v) + adj_ell * log T'(T^{-1}(v)) for a fixed v.
struct ObjectiveAdjoint {
  struct Forward {
    double z, adj_u, adj_ell;
  };
  struct Inverse {
    double v, adj_z, adj_ell;
  };
  std::vector<Forward> forward;
  std::vector<Inverse> inverse;
};

/// Constrained knot representation of a parameter vector.
class SplineFlow {
 public:
  explicit SplineFlow(const SplineFlowParams& params);

  /// Local evaluation record; lets gradient accumulation reuse a previous
  /// transform / inverse call instead of recomputing it.
  struct Trace {
    int bin = -1;  // -1: identity tail, no parameter dependence
    double u_z = 1.0, ell_z = 0.0;
    double up[6] = {}, lp[6] = {};
  };

  FlowEval transform(double z) const;
  FlowEval inverse(double u) const;
  FlowEval transform(double z, Trace& trace) const;
  FlowEval inverse(double u, Trace& trace) const;
  double log_density(double u) const;

  /// Gradient accumulation in knot space; call gradient() to map back to theta.
  void accumulate_forward(double z, double adj_u, double adj_ell);
  void accumulate_inverse(double v, double adj_z, double adj_ell);
  void accumulate_forward(const Trace& t, double adj_u, double adj_ell);
  void accumulate_inverse(const Trace& t, double adj_z, double adj_ell);
  std::vector<double> gradient() const;
  void clear_gradient();

  int n_bins() const { return n_; }
  double tail_bound() const { return bound_; }
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_y() const { return ys_; }
  const std::vector<double>& knot_derivatives() const { return ds_; }

 private:
  struct Local;
  int bin_of(const std::vector<double>& knots, double t) const;
  Local local(int k, double xi, Trace* trace) const;
  void scatter(int k, const double* gp);

  int n_;
  double bound_;
  double min_w_, min_h_;
  std::vector<double> pw_, ph_;  // softmax probabilities
  std::vector<double> sig_;      // sigmoid of raw derivative entries
  std::vector<double> w_, h_;    // bin widths and heights
  std::vector<double> xs_, ys_, ds_;
  // knot-space gradient accumulators
  std::vector<double> gx_, gw_, gy_, gh_, gd_;
};

FlowEval transform(const SplineFlowParams& params, double z);
FlowEval inverse(const SplineFlowParams& params, double u);
double log_density(const SplineFlowParams& params, double u);
std::vector<double> sample(const SplineFlowParams& params, std::size_t k, const LatentSampler& sampler);
std::vector<double> parameter_gradients(const SplineFlowParams& params, const ObjectiveAdjoint& adj);

}  // namespace sensibound
