#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sensibound/outcome.hpp"
#include "sensibound/random.hpp"

namespace sensibound {

struct PriorConfig {
  int d_x = 10;
  int n_obs = 1024;
  std::vector<int> hidden_widths{32, 32};
  std::string activation = "tanh";  // tanh | relu
  double weight_scale = 1.0;
  std::pair<double, double> propensity_clip{0.02, 0.98};
  std::pair<double, double> noise_scale_range{0.5, 1.5};
  double normalize_eps = 1e-6;
  int pilot_size = 4096;

  /// Throws InputError on any violated invariant.
  void validate() const;
};

struct Layer {
  int in = 0, out = 0;
  std::vector<double> w;  // row-major out x in
  std::vector<double> b;
};

struct Mlp {
  std::vector<Layer> layers;
  bool relu = false;

  std::vector<double> operator()(const std::vector<double>& input) const;
};

struct StructuralCausalModel {
  std::uint64_t seed = 0;
  PriorConfig config;
  std::vector<double> noise_std;  // per-covariate exogenous scale
  Mlp f_x;                        // d_x -> d_x, added to the exogenous noise
  Mlp f_a;                        // d_x -> 1 (treatment logit)
  Mlp f_y;                        // d_x + 1 -> 4 (outcome curve heads)
  std::pair<double, double> y_shift_scale{0.0, 1.0};

  /// Covariates from exogenous noise eps (length d_x).
  std::vector<double> covariates(const std::vector<double>& eps) const;
  /// Normalized outcome curve u -> y for a fixed (x, a).
  OutcomeCurve outcome_curve(const std::vector<double>& x, int a) const;
};

struct Row {
  std::vector<double> x;
  int a = 0;
  double y = 0.0;
};

struct Dataset {
  std::vector<Row> rows;
  std::uint64_t scm_seed = 0;
};

struct QueryPoint {
  std::int64_t query_id = 0;
  std::vector<double> x;
  int a = 0;
};

StructuralCausalModel sample_scm(const PriorConfig& config, std::uint64_t seed);
Dataset sample_dataset(const StructuralCausalModel& scm, int n, std::uint64_t seed);

/// Outcome draws for a fixed (x, a) from the observational mechanism.
std::vector<double> sample_outcomes(const StructuralCausalModel& scm, const std::vector<double>& x, int a, int k,
                                    std::uint64_t seed);
/// P(A = a | x), clipped; the two arms sum to exactly 1.
double propensity(const StructuralCausalModel& scm, const std::vector<double>& x, int a);
double outcome(const StructuralCausalModel& scm, const std::vector<double>& x, double u, int a);
double outcome_inverse(const StructuralCausalModel& scm, const std::vector<double>& x, double y, int a);

/// Q0 = E_{U~N(0,1)} f(x, U, a) from k latent draws.
double point_identified_capo(const OutcomeCurve& curve, int k, const LatentSampler& sampler);
double point_identified_capo(const StructuralCausalModel& scm, const QueryPoint& q, int k,
                             std::uint64_t seed);

/// m covariate rows from the dataset (without replacement when m <= n), each
/// expanded to arms 0 and 1. Ids are 2*row_index + arm.
std::vector<QueryPoint> sample_queries(const StructuralCausalModel& scm, const Dataset& data, int m,
                                       std::uint64_t seed);

/// Everything the bound machinery needs about one query.
struct QueryContext {
  std::int64_t query_id = 0;
  double pi = 0.5;  // P(A = a | x) for the queried arm
  OutcomeCurve curve;
  double q0 = 0.0;
};

inline constexpr int kQ0Draws = 1 << 16;

QueryContext query_context(const StructuralCausalModel& scm, const QueryPoint& q,
                           int k = kQ0Draws, std::uint64_t seed = 123);

}  // namespace sensibound
