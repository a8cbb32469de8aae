#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sensibound/random.hpp"
#include "sensibound/spline_flow.hpp"

namespace sensibound {

struct GtsmSpec {
  enum class Kind { MSM, F_KL, Rosenbaum };
  Kind kind = Kind::F_KL;

  /// Divergence value at point identification (nu = phi).
  double floor() const { return kind == Kind::F_KL ? 0.0 : 1.0; }
  std::string name() const;
  static GtsmSpec parse(const std::string& name);
};

struct DivergenceEstimate {
  enum class Estimator { MC, Quadrature };
  double value = 0.0;
  std::size_t n_samples = 0;
  Estimator estimator = Estimator::MC;
  double std_error = 0.0;  // F_KL only; extremum-based values report 0
};

/// How the reverse KL term E_phi[-log r] is estimated from a sample bank.
enum class ReverseKl {
  Direct,      // phi draws pushed through the inverse flow
  Importance,  // self-normalized reweighting of nu draws
};

double density_ratio(const SplineFlow& flow, double u);
double density_ratio(const SplineFlowParams& params, double u);
double log_density_ratio(const SplineFlow& flow, double u);

/// Uniform grid on [-B, B] used to augment sampled extrema.
std::vector<double> extremum_grid(double tail_bound, int n = 512);

DivergenceEstimate divergence_mc(const GtsmSpec& spec, const SplineFlowParams& params, std::size_t k,
                                 const LatentSampler& sampler, ReverseKl reverse = ReverseKl::Direct);
DivergenceEstimate divergence_quadrature(const GtsmSpec& spec, const SplineFlowParams& params, int grid);

/// max(KL(nu||phi), KL(phi||nu)) for a density tabulated on a uniform grid
/// (trapezoid rule; the density is renormalized on the grid first).
double f_kl_on_grid(const std::vector<double>& u, const std::vector<double>& density);

}  // namespace sensibound
