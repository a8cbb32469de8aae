#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sensibound/gtsm.hpp"
#include "sensibound/oracles.hpp"
#include "sensibound/prior.hpp"
#include "sensibound/spline_flow.hpp"

namespace sensibound {

enum class BoundType { Lower, Upper };

std::string to_string(BoundType b);
BoundType parse_bound_type(const std::string& s);
/// +1 for upper, -1 for lower: the ascent direction of the query term.
inline double bound_sign(BoundType b) { return b == BoundType::Upper ? 1.0 : -1.0; }

struct LambdaGrid {
  double lambda_max = 2.0;
  double lambda_min = 0.08;
  int n_points = 50;

  void validate() const;
  /// Log-uniform, strictly descending from lambda_max to lambda_min.
  std::vector<double> values() const;
};

struct EarlyStop {
  bool enabled = true;
  int min_steps = 100;
  int check_every = 25;
  int patience = 3;
  double abs_tol = 2e-4;
  double rel_tol = 5e-4;
};

struct SweepConfig {
  int base_max_steps = 350;
  double step_cap = 2.0;      // steps(l) = base * min(cap, sqrt(l_max / l))
  double lr_base = 1e-3;
  double lr_ref = 0.25;       // lr(l) = lr_base * max(lr_min_mult, sqrt(l / lr_ref))
  double lr_min_mult = 0.40;
  EarlyStop early_stop;
  int k_train = 128;
  int k_eval = 4096;
  bool warm_start = true;
  int n_bins = 16;
  double tail_bound = 6.0;
  std::uint64_t sampler_seed = 123;
  double msm_temperature = 0.01;
  int msm_grid = 512;

  void validate() const;
  int steps_for(double lambda, double lambda_max) const;
  double lr_for(double lambda) const;
};

struct FrontierPoint {
  double lambda = 0.0;
  double gamma_star = 0.0;
  double theta_star = 0.0;
  BoundType bound_type = BoundType::Upper;
  int steps_used = 0;
  double theta_se = 0.0;
  double gamma_se = 0.0;
  double objective = 0.0;  // theta - lambda*Delta (upper) or theta + lambda*Delta (lower)
  double objective_se = 0.0;
  bool degraded = false;
};

struct FrontierCurve {
  std::int64_t query_id = 0;
  BoundType bound_type = BoundType::Upper;
  double q0 = 0.0;
  double manski = 0.0;  // no-assumption limit on this side
  std::vector<FrontierPoint> points;
  std::vector<std::vector<double>> checkpoints;  // flow vector after each lambda

  bool degraded() const;
  int total_steps() const;
};

/// Fixed latent nodes shared by every evaluation of one optimization.
struct SampleBank {
  std::vector<double> z;
  std::vector<double> grid;  // extra extremum points for MSM / Rosenbaum

  static SampleBank make(int k, std::uint64_t seed, double tail_bound, int grid_points);
};

struct ObjectiveValue {
  double theta = 0.0, theta_se = 0.0;
  double delta = 0.0, delta_se = 0.0;
  double objective = 0.0, objective_se = 0.0;  // natural sign, see FrontierPoint
};

/// Training mode uses the smooth MSM surrogate and unclamped KL; the gradient
/// (if requested) is that of the ascent objective sign*theta - lambda*Delta.
ObjectiveValue evaluate_objective(SplineFlow& flow, const QueryContext& ctx, double lambda, BoundType bound,
                                  const GtsmSpec& spec, const SampleBank& bank, bool training,
                                  double temperature = 0.01, std::vector<double>* grad = nullptr);

double scalarized_objective(const SplineFlowParams& params, const QueryContext& ctx, double lambda,
                            BoundType bound, const GtsmSpec& spec, int k, const LatentSampler& sampler);

struct SweepBanks {
  SampleBank train, eval;
  static SweepBanks make(const SweepConfig& config);
};

/// Runs the per-lambda optimizer on params in place (moments reset at entry).
FrontierPoint optimize_at_lambda(SplineFlowParams& params, const QueryContext& ctx, double lambda, BoundType bound,
                                 const GtsmSpec& spec, const SweepConfig& config, const SweepBanks& banks,
                                 double lambda_max);

struct SweepOptions {
  std::ostream* log = nullptr;              // one JSON object per lambda
  const SplineFlowParams* initial = nullptr;  // resume point; identity when null
};

FrontierCurve sweep(const QueryContext& ctx, const GtsmSpec& spec, BoundType bound, const LambdaGrid& grid,
                    const SweepConfig& config, const SweepOptions& options = {});

struct FrontierPair {
  FrontierCurve lower, upper;
};

FrontierPair sweep(const StructuralCausalModel& scm, const QueryPoint& q, const GtsmSpec& spec,
                   const LambdaGrid& grid, const SweepConfig& config);

/// Isotonic reporting view: points sorted by Gamma*, theta made monotone
/// (non-decreasing for upper, non-increasing for lower), equal Gamma* merged.
struct MonotoneFrontier {
  std::vector<double> gamma, theta;
};
MonotoneFrontier isotonic_frontier(const FrontierCurve& curve);

double frontier_at_gamma(const FrontierCurve& curve, double gamma);
double invert_frontier(const FrontierCurve& curve, double theta_target);
std::vector<double> regret_vs_reference(const FrontierCurve& curve, const FrontierCurve& reference);

/// Adjacent Gamma* pairs along the sweep that decrease by more than z
/// combined standard errors.
int count_gamma_inversions(const FrontierCurve& curve, double z = 3.0);

}  // namespace sensibound
