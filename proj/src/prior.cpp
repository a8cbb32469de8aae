#include "sensibound/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sensibound/errors.hpp"
#include "sensibound/normal.hpp"

namespace sensibound {

namespace {

double uniform01(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53; }
double std_normal(Rng& rng) { return normal::quantile(uniform01(rng)); }

double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }
double sigmoid(double t) { return 0.5 + 0.5 * std::tanh(0.5 * t); }

Mlp make_mlp(int in, const std::vector<int>& widths, int out, const PriorConfig& cfg, Rng& rng) {
  Mlp net;
  net.relu = cfg.activation == "relu";
  int prev = in;
  auto add = [&](int next) {
    Layer l;
    l.in = prev;
    l.out = next;
    l.w.resize(static_cast<std::size_t>(next) * prev);
    l.b.resize(next);
    const double sd = cfg.weight_scale / std::sqrt(static_cast<double>(prev));
    for (auto& w : l.w) w = sd * std_normal(rng);
    for (auto& b : l.b) b = 0.5 * cfg.weight_scale * std_normal(rng);
    net.layers.push_back(std::move(l));
    prev = next;
  };
  for (int w : widths) add(w);
  add(out);
  return net;
}

void require_finite(const std::vector<double>& x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("covariate vector contains a non-finite value");
  }
}

OutcomeCurve raw_curve(const StructuralCausalModel& scm, const std::vector<double>& x, int a) {
  std::vector<double> in(x);
  in.push_back(a == 1 ? 1.0 : -1.0);
  const auto o = scm.f_y(in);
  OutcomeCurve c;
  c.offset = o[0];
  c.slope = 1e-3 + softplus(o[1] + 0.5);
  c.shift = 0.75 * std::tanh(o[2]);
  c.saturation = 1.0 + sigmoid(o[3]);
  return c;
}

std::vector<double> draw_covariates(const StructuralCausalModel& scm, Rng& rng) {
  std::vector<double> eps(scm.noise_std.size());
  for (std::size_t j = 0; j < eps.size(); ++j) eps[j] = scm.noise_std[j] * std_normal(rng);
  return scm.covariates(eps);
}

}  // namespace

void PriorConfig::validate() const {
  if (d_x < 1) throw InputError("d_x must be >= 1");
  if (n_obs < 1) throw InputError("n_obs must be >= 1");
  for (int w : hidden_widths) {
    if (w < 1) throw InputError("hidden widths must be >= 1");
  }
  if (activation != "tanh" && activation != "relu") {
    throw InputError("activation must be tanh or relu");
  }
  if (!(weight_scale > 0.0) || !std::isfinite(weight_scale)) {
    throw InputError("weight_scale must be positive");
  }
  const auto [lo, hi] = propensity_clip;
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
    throw InputError("propensity clip must satisfy 0 < lo < hi < 1");
  }
  const auto [nlo, nhi] = noise_scale_range;
  if (!(nlo > 0.0 && nlo <= nhi && std::isfinite(nhi))) {
    throw InputError("noise scale range must satisfy 0 < lo <= hi");
  }
  if (!(normalize_eps > 0.0)) throw InputError("normalize_eps must be positive");
  if (pilot_size < 2) throw InputError("pilot_size must be >= 2");
}

std::vector<double> Mlp::operator()(const std::vector<double>& input) const {
  std::vector<double> h = input;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const Layer& l = layers[li];
    std::vector<double> next(l.b);
    for (int i = 0; i < l.out; ++i) {
      const double* row = l.w.data() + static_cast<std::size_t>(i) * l.in;
      double acc = 0.0;
      for (int j = 0; j < l.in; ++j) acc += row[j] * h[j];
      next[i] += acc;
    }
    if (li + 1 < layers.size()) {
      for (auto& v : next) v = relu ? std::max(0.0, v) : std::tanh(v);
    }
    h = std::move(next);
  }
  return h;
}

std::vector<double> StructuralCausalModel::covariates(const std::vector<double>& eps) const {
  auto x = f_x(eps);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] += eps[j];
  return x;
}

OutcomeCurve StructuralCausalModel::outcome_curve(const std::vector<double>& x, int a) const {
  OutcomeCurve c = raw_curve(*this, x, a);
  const auto [loc, scale] = y_shift_scale;
  c.offset = (c.offset - loc) / scale;
  c.slope /= scale;
  return c;
}

StructuralCausalModel sample_scm(const PriorConfig& config, std::uint64_t seed) {
  config.validate();
  StructuralCausalModel scm;
  scm.seed = seed;
  scm.config = config;
  Rng rng = make_rng(seed, 0, "scm-weights");
  const int d = config.d_x;
  scm.noise_std.resize(d);
  const auto [nlo, nhi] = config.noise_scale_range;
  for (auto& s : scm.noise_std) s = nlo + (nhi - nlo) * uniform01(rng);
  scm.f_x = make_mlp(d, config.hidden_widths, d, config, rng);
  scm.f_a = make_mlp(d, config.hidden_widths, 1, config, rng);
  scm.f_y = make_mlp(d + 1, config.hidden_widths, 4, config, rng);

  // Normalization pilot over the observational distribution.
  Rng pilot = make_rng(seed, 0, "scm-pilot");
  std::vector<double> ys(config.pilot_size);
  for (auto& y : ys) {
    const auto x = draw_covariates(scm, pilot);
    const int a = uniform01(pilot) < propensity(scm, x, 1) ? 1 : 0;
    y = raw_curve(scm, x, a)(std_normal(pilot));
  }
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / (ys.size() - 1));
  scm.y_shift_scale = {mean, std::max(sd, config.normalize_eps)};
  return scm;
}

Dataset sample_dataset(const StructuralCausalModel& scm, int n, std::uint64_t seed) {
  if (n < 1) throw InputError("dataset size must be >= 1");
  Rng rng = make_rng(seed, scm.seed, "dataset");
  Dataset data;
  data.scm_seed = scm.seed;
  data.rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    Row r;
    r.x = draw_covariates(scm, rng);
    r.a = uniform01(rng) < propensity(scm, r.x, 1) ? 1 : 0;
    r.y = scm.outcome_curve(r.x, r.a)(std_normal(rng));
    data.rows.push_back(std::move(r));
  }
  return data;
}

std::vector<double> sample_outcomes(const StructuralCausalModel& scm, const std::vector<double>& x, int a, int k,
                                    std::uint64_t seed) {
  if (k < 1) throw InputError("k must be >= 1");
  if (a != 0 && a != 1) throw InputError("treatment must be 0 or 1");
  require_finite(x);
  Rng rng = make_rng(seed, scm.seed, "outcomes");
  const OutcomeCurve curve = scm.outcome_curve(x, a);
  std::vector<double> y(k);
  for (auto& v : y) v = curve(std_normal(rng));
  return y;
}

double propensity(const StructuralCausalModel& scm, const std::vector<double>& x, int a) {
  if (a != 0 && a != 1) throw InputError("treatment must be 0 or 1");
  require_finite(x);
  const double logit = scm.f_a(x)[0];
  // Effective clip is symmetric about 1/2 so both arms stay inside [lo, hi].
  const auto [lo, hi] = scm.config.propensity_clip;
  const double floor = std::max(lo, 1.0 - hi);
  double q = 0.5 + (0.5 - floor) * std::tanh(0.5 * std::abs(logit));
  q = std::min(q, hi);
  while (1.0 - q < lo) q = std::nextafter(q, 0.0);
  const bool majority = (logit >= 0.0) == (a == 1);
  return majority ? q : 1.0 - q;
}

double outcome(const StructuralCausalModel& scm, const std::vector<double>& x, double u, int a) {
  if (!std::isfinite(u)) throw InputError("latent value must be finite");
  require_finite(x);
  return scm.outcome_curve(x, a)(u);
}

double outcome_inverse(const StructuralCausalModel& scm, const std::vector<double>& x, double y,
                       int a) {
  require_finite(x);
  return scm.outcome_curve(x, a).inverse(y);
}

double point_identified_capo(const OutcomeCurve& curve, int k, const LatentSampler& sampler) {
  if (k < 1) throw InputError("k must be >= 1");
  const auto z = sampler.normals(k);
  double acc = 0.0;
  for (double u : z) acc += curve(u);
  return acc / k;
}

double point_identified_capo(const StructuralCausalModel& scm, const QueryPoint& q, int k,
                             std::uint64_t seed) {
  require_finite(q.x);
  return point_identified_capo(scm.outcome_curve(q.x, q.a), k, {LatentSampler::Kind::Sobol, seed});
}

std::vector<QueryPoint> sample_queries(const StructuralCausalModel& scm, const Dataset& data, int m,
                                       std::uint64_t seed) {
  if (m < 1) throw InputError("number of query rows must be >= 1");
  Rng rng = make_rng(seed, scm.seed, "queries");
  const int n = static_cast<int>(data.rows.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(m, n);
  for (int i = 0; i < take; ++i) {
    // modulo draw instead of uniform_int_distribution keeps files identical across standard libraries
    const auto pick = i + static_cast<int>(rng() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[i], idx[pick]);
  }
  std::vector<QueryPoint> out;
  out.reserve(2 * static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    // Past the dataset size, covariates come fresh from the SCM.
    const auto x = j < take ? data.rows[idx[j]].x : draw_covariates(scm, rng);
    for (int a = 0; a < 2; ++a) out.push_back({2 * static_cast<std::int64_t>(j) + a, x, a});
  }
  return out;
}

QueryContext query_context(const StructuralCausalModel& scm, const QueryPoint& q, int k,
                           std::uint64_t seed) {
  QueryContext ctx;
  ctx.query_id = q.query_id;
  ctx.pi = propensity(scm, q.x, q.a);
  ctx.curve = scm.outcome_curve(q.x, q.a);
  ctx.q0 = point_identified_capo(ctx.curve, k, {LatentSampler::Kind::Sobol, seed});
  return ctx;
}

}  // namespace sensibound
