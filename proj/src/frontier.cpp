#include "sensibound/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sensibound/adam.hpp"
#include "sensibound/errors.hpp"
#include "sensibound/isotonic.hpp"

namespace sensibound {

namespace {

double mean_se(const std::vector<double>& v, double* se) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  *se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string to_string(BoundType b) { return b == BoundType::Upper ? "upper" : "lower"; }

BoundType parse_bound_type(const std::string& s) {
  if (s == "upper") return BoundType::Upper;
  if (s == "lower") return BoundType::Lower;
  throw InputError("bound type must be lower or upper, got '" + s + "'");
}

void LambdaGrid::validate() const {
  if (!(lambda_min > 0.0 && lambda_max > lambda_min && std::isfinite(lambda_max))) {
    throw InputError("lambda grid needs lambda_max > lambda_min > 0");
  }
  if (n_points < 2) throw InputError("lambda grid needs at least 2 points");
}

std::vector<double> LambdaGrid::values() const {
  validate();
  std::vector<double> out(n_points);
  const double a = std::log(lambda_max), b = std::log(lambda_min);
  for (int i = 0; i < n_points; ++i) out[i] = std::exp(a + (b - a) * i / (n_points - 1));
  out.front() = lambda_max;
  out.back() = lambda_min;
  return out;
}

void SweepConfig::validate() const {
  if (base_max_steps < 1) throw InputError("base_max_steps must be >= 1");
  if (!(step_cap >= 1.0)) throw InputError("step cap must be >= 1");
  if (!(lr_base > 0.0 && lr_ref > 0.0 && lr_min_mult > 0.0)) throw InputError("learning-rate settings must be positive");
  if (k_train < 2 || k_eval < k_train) throw InputError("need 2 <= k_train <= k_eval");
  const auto& e = early_stop;
  if (e.min_steps < 0 || e.check_every < 1 || e.patience < 1 || !(e.abs_tol > 0.0) || !(e.rel_tol > 0.0)) {
    throw InputError("early-stopping tolerances must be positive");
  }
  if (n_bins < 1 || !(tail_bound > 0.0)) throw InputError("invalid flow shape");
  if (!(msm_temperature > 0.0) || msm_grid < 2) throw InputError("invalid MSM surrogate settings");
}

int SweepConfig::steps_for(double lambda, double lambda_max) const {
  const double mult = std::min(step_cap, std::sqrt(lambda_max / lambda));
  return std::max(1, static_cast<int>(std::lround(base_max_steps * mult)));
}

double SweepConfig::lr_for(double lambda) const {
  return lr_base * std::max(lr_min_mult, std::sqrt(lambda / lr_ref));
}

bool FrontierCurve::degraded() const {
  return std::any_of(points.begin(), points.end(), [](const FrontierPoint& p) { return p.degraded; });
}

int FrontierCurve::total_steps() const {
  int s = 0;
  for (const auto& p : points) s += p.steps_used;
  return s;
}

SampleBank SampleBank::make(int k, std::uint64_t seed, double tail_bound, int grid_points) {
  SampleBank b;
  b.z = LatentSampler{LatentSampler::Kind::Sobol, seed}.normals(k);
  b.grid = extremum_grid(tail_bound, grid_points);
  return b;
}

SweepBanks SweepBanks::make(const SweepConfig& c) {
  return {SampleBank::make(c.k_train, c.sampler_seed, c.tail_bound, c.msm_grid),
          SampleBank::make(c.k_eval, derive_seed(c.sampler_seed, 0, "eval-bank"), c.tail_bound, c.msm_grid)};
}

ObjectiveValue evaluate_objective(SplineFlow& flow, const QueryContext& ctx, double lambda, BoundType bound,
                                  const GtsmSpec& spec, const SampleBank& bank, bool training, double temperature,
                                  std::vector<double>* grad) {
  const std::size_t k = bank.z.size();
  const double w = 1.0 / static_cast<double>(k);
  const double sigma = bound_sign(bound);
  const double arm = 1.0 - ctx.pi;

  std::vector<double> u(k), f(k), df(k), lr_nu(k), zeta(k), lr_phi(k);
  std::vector<SplineFlow::Trace> tf(grad ? k : 0), ti(grad ? k : 0);
  for (std::size_t i = 0; i < k; ++i) {
    const double z = bank.z[i];
    const FlowEval fe = grad ? flow.transform(z, tf[i]) : flow.transform(z);
    u[i] = fe.value;
    f[i] = ctx.curve.value_and_derivative(u[i], df[i]);
    lr_nu[i] = 0.5 * (u[i] * u[i] - z * z) - fe.log_abs_det;
    const FlowEval iv = grad ? flow.inverse(z, ti[i]) : flow.inverse(z);
    zeta[i] = iv.value;
    lr_phi[i] = 0.5 * (z * z - zeta[i] * zeta[i]) + iv.log_abs_det;
  }

  ObjectiveValue out;
  double f_se = 0.0;
  const double f_mean = mean_se(f, &f_se);
  out.theta = ctx.pi * ctx.q0 + arm * f_mean;
  out.theta_se = arm * f_se;

  if (grad) flow.clear_gradient();
  if (grad) {
    for (std::size_t i = 0; i < k; ++i) flow.accumulate_forward(tf[i], sigma * arm * w * df[i], 0.0);
  }

  std::vector<double> per(k);
  if (spec.kind == GtsmSpec::Kind::F_KL) {
    // Training adds the zero-mean control variates 1/r - 1 (under nu) and
    // r - 1 (under phi): each summand is then >= 0, so a small bank cannot be
    // pushed to a negative divergence estimate.
    std::vector<double> fwd(k), rev(k), cv_nu(k, 0.0), cv_phi(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (training) {
        cv_nu[i] = std::exp(-lr_nu[i]) - 1.0;
        cv_phi[i] = std::exp(lr_phi[i]) - 1.0;
      }
      fwd[i] = lr_nu[i] + cv_nu[i];
      rev[i] = -lr_phi[i] + cv_phi[i];
    }
    double fse = 0.0, rse = 0.0;
    const double fwd_mean = mean_se(fwd, &fse);
    const double rev_mean = mean_se(rev, &rse);
    const bool forward = fwd_mean >= rev_mean;
    out.delta = forward ? fwd_mean : rev_mean;
    if (!training) out.delta = std::max(out.delta, 0.0);
    out.delta_se = forward ? fse : rse;
    for (std::size_t i = 0; i < k; ++i) per[i] = sigma * arm * f[i] - lambda * (forward ? fwd[i] : rev[i]);
    if (grad) {
      for (std::size_t i = 0; i < k; ++i) {
        if (forward) {
          const double c = lambda * w * -cv_nu[i];  // d(summand)/d(log r) = 1 - 1/r
          flow.accumulate_forward(tf[i], -c * u[i], c);
        } else {
          const double c = lambda * w * cv_phi[i];  // d(summand)/d(log r) = r - 1
          flow.accumulate_inverse(ti[i], c * zeta[i], c);
        }
      }
    }
  } else {
    std::vector<double> lr_grid(bank.grid.size()), zeta_grid(bank.grid.size());
    std::vector<SplineFlow::Trace> tg(grad ? bank.grid.size() : 0);
    for (std::size_t j = 0; j < bank.grid.size(); ++j) {
      const double v = bank.grid[j];
      const FlowEval iv = grad ? flow.inverse(v, tg[j]) : flow.inverse(v);
      zeta_grid[j] = iv.value;
      lr_grid[j] = 0.5 * (v * v - iv.value * iv.value) + iv.log_abs_det;
    }
    double hi = -std::numeric_limits<double>::infinity(), lo = -hi;
    for (const auto* vec : {&lr_nu, &lr_phi, &lr_grid}) {
      for (double t : *vec) {
        hi = std::max(hi, t);
        lo = std::min(lo, t);
      }
    }
    if (spec.kind == GtsmSpec::Kind::Rosenbaum) {
      if (training) throw InputError("Rosenbaum model is evaluate-only");
      out.delta = std::exp(std::max(hi - lo, 0.0));
    } else if (!training) {
      out.delta = std::exp(std::max({hi, -lo, 0.0}));
    } else {
      // Smooth surrogate exp(tau * logsumexp(+-t / tau)) of the extreme ratio.
      const double tau = temperature;
      const double m = std::max(hi, -lo) / tau;
      double total = 0.0;
      for (const auto* vec : {&lr_nu, &lr_phi, &lr_grid}) {
        for (double t : *vec) total += std::exp(t / tau - m) + std::exp(-t / tau - m);
      }
      const double gamma_s = std::exp(tau * (m + std::log(total)));
      out.delta = gamma_s;
      if (grad) {
        auto weight = [&](double t) { return gamma_s * (std::exp(t / tau - m) - std::exp(-t / tau - m)) / total; };
        for (std::size_t i = 0; i < k; ++i) {
          const double gn = weight(lr_nu[i]);
          flow.accumulate_forward(tf[i], -lambda * gn * u[i], lambda * gn);
          const double gp = weight(lr_phi[i]);
          flow.accumulate_inverse(ti[i], lambda * gp * zeta[i], lambda * gp);
        }
        for (std::size_t j = 0; j < bank.grid.size(); ++j) {
          const double gg = weight(lr_grid[j]);
          flow.accumulate_inverse(tg[j], lambda * gg * zeta_grid[j], lambda * gg);
        }
      }
    }
    for (std::size_t i = 0; i < k; ++i) per[i] = sigma * arm * f[i];
  }
  double j_se = 0.0;
  mean_se(per, &j_se);
  // Natural sign: theta - lambda*Delta for upper, theta + lambda*Delta for lower.
  out.objective = out.theta - sigma * lambda * out.delta;
  out.objective_se = j_se;
  if (grad) *grad = flow.gradient();
  return out;
}

double scalarized_objective(const SplineFlowParams& params, const QueryContext& ctx, double lambda, BoundType bound,
                            const GtsmSpec& spec, int k, const LatentSampler& sampler) {
  if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  if (k < 2) throw InputError("k must be >= 2");
  SampleBank bank;
  bank.z = sampler.normals(k);
  bank.grid = extremum_grid(params.tail_bound);
  SplineFlow flow(params);
  return evaluate_objective(flow, ctx, lambda, bound, spec, bank, false).objective;
}

FrontierPoint optimize_at_lambda(SplineFlowParams& params, const QueryContext& ctx, double lambda, BoundType bound,
                                 const GtsmSpec& spec, const SweepConfig& config, const SweepBanks& banks,
                                 double lambda_max) {
  if (!(lambda > 0.0)) throw InputError("lambda must be positive");
  if (spec.kind == GtsmSpec::Kind::Rosenbaum) throw InputError("frontier sweeps support MSM and F_KL only");
  const double sigma = bound_sign(bound);
  const int cap = config.steps_for(lambda, lambda_max);
  Adam adam(params.size(), config.lr_for(lambda));
  const EarlyStop& es = config.early_stop;

  FrontierPoint pt;
  pt.lambda = lambda;
  pt.bound_type = bound;

  std::vector<double> grad;
  std::vector<double> last_finite = params.theta;
  double best = 0.0;
  int stale = 0;
  for (int step = 0; step <= cap; ++step) {
    SplineFlow flow(params);
    ObjectiveValue v;
    bool finite = true;
    try {
      v = evaluate_objective(flow, ctx, lambda, bound, spec, banks.train, true, config.msm_temperature,
                             step < cap ? &grad : nullptr);
    } catch (const NumericalError&) {
      finite = false;
    }
    const double score = sigma * v.objective;  // ascent form
    finite = finite && std::isfinite(score) && (step == cap || all_finite(grad));
    if (!finite) {
      params.theta = last_finite;
      pt.degraded = true;
      break;
    }
    last_finite = params.theta;
    if (step == 0) best = score;
    if (es.enabled && step >= es.min_steps && step > 0 && step % es.check_every == 0) {
      if (score > best + std::max(es.abs_tol, es.rel_tol * std::abs(best))) {
        best = score;
        stale = 0;
      } else if (++stale >= es.patience) {
        break;
      }
    }
    if (step == cap) break;
    adam.ascend(params.theta, grad);
    ++pt.steps_used;
  }

  SplineFlow flow(params);
  const ObjectiveValue e = evaluate_objective(flow, ctx, lambda, bound, spec, banks.eval, false);
  pt.gamma_star = e.delta;
  pt.gamma_se = e.delta_se;
  pt.theta_star = e.theta;
  pt.theta_se = e.theta_se;
  pt.objective = e.objective;
  pt.objective_se = e.objective_se;
  return pt;
}

FrontierCurve sweep(const QueryContext& ctx, const GtsmSpec& spec, BoundType bound, const LambdaGrid& grid,
                    const SweepConfig& config, const SweepOptions& options) {
  config.validate();
  const auto lambdas = grid.values();
  const SweepBanks banks = SweepBanks::make(config);
  const Bounds manski = manski_bounds(ctx);

  FrontierCurve curve;
  curve.query_id = ctx.query_id;
  curve.bound_type = bound;
  curve.q0 = ctx.q0;
  curve.manski = bound == BoundType::Upper ? manski.upper : manski.lower;

  const SplineFlowParams fresh = SplineFlowParams::identity(config.n_bins, config.tail_bound);
  SplineFlowParams params = options.initial ? *options.initial : fresh;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!config.warm_start && i > 0) params = fresh;
    FrontierPoint pt = optimize_at_lambda(params, ctx, lambdas[i], bound, spec, config, banks, grid.lambda_max);
    if (options.log) {
      nlohmann::json line = {{"query_id", ctx.query_id},   {"bound_type", to_string(bound)},
                             {"lambda", pt.lambda},        {"gamma_star", pt.gamma_star},
                             {"theta_star", pt.theta_star}, {"objective", pt.objective},
                             {"steps_used", pt.steps_used}, {"degraded", pt.degraded}};
      *options.log << line.dump() << '\n';
    }
    curve.points.push_back(pt);
    curve.checkpoints.push_back(params.theta);
  }
  return curve;
}

FrontierPair sweep(const StructuralCausalModel& scm, const QueryPoint& q, const GtsmSpec& spec,
                   const LambdaGrid& grid, const SweepConfig& config) {
  const QueryContext ctx = query_context(scm, q);
  return {sweep(ctx, spec, BoundType::Lower, grid, config), sweep(ctx, spec, BoundType::Upper, grid, config)};
}

MonotoneFrontier isotonic_frontier(const FrontierCurve& curve) {
  if (curve.points.empty()) throw InputError("frontier curve has no points");
  const bool upper = curve.bound_type == BoundType::Upper;
  std::vector<std::size_t> idx(curve.points.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return curve.points[a].gamma_star < curve.points[b].gamma_star; });
  MonotoneFrontier mf;
  for (std::size_t i : idx) {
    const auto& p = curve.points[i];
    if (!mf.gamma.empty() && mf.gamma.back() == p.gamma_star) {
      mf.theta.back() = upper ? std::max(mf.theta.back(), p.theta_star) : std::min(mf.theta.back(), p.theta_star);
    } else {
      mf.gamma.push_back(p.gamma_star);
      mf.theta.push_back(p.theta_star);
    }
  }
  mf.theta = isotonic_fit(mf.theta, {}, upper);
  return mf;
}

double frontier_at_gamma(const FrontierCurve& curve, double gamma) {
  const MonotoneFrontier mf = isotonic_frontier(curve);
  if (!(gamma >= mf.gamma.front() && gamma <= mf.gamma.back())) {
    std::ostringstream msg;
    msg << "sensitivity level " << gamma << " outside the traced range [" << mf.gamma.front() << ", "
        << mf.gamma.back() << "]";
    throw ExtrapolationError(msg.str());
  }
  const auto it = std::lower_bound(mf.gamma.begin(), mf.gamma.end(), gamma);
  const std::size_t j = static_cast<std::size_t>(it - mf.gamma.begin());
  if (mf.gamma[j] == gamma) return mf.theta[j];
  const double t = (gamma - mf.gamma[j - 1]) / (mf.gamma[j] - mf.gamma[j - 1]);
  return mf.theta[j - 1] + t * (mf.theta[j] - mf.theta[j - 1]);
}

double invert_frontier(const FrontierCurve& curve, double theta_target) {
  const MonotoneFrontier mf = isotonic_frontier(curve);
  const double s = bound_sign(curve.bound_type);
  // In sign-adjusted units the bound is non-decreasing in Gamma.
  const double target = s * theta_target;
  if (target <= s * mf.theta.front()) return mf.gamma.front();
  if (target > s * mf.theta.back()) {
    std::ostringstream msg;
    msg << "target " << theta_target << " is not reached by the " << to_string(curve.bound_type)
        << " frontier (extreme traced value " << mf.theta.back() << "; Manski limit " << curve.manski << ")";
    if (target > s * curve.manski) msg << "; the target lies beyond the Manski limit";
    throw UnreachableError(msg.str());
  }
  std::size_t j = 1;
  while (s * mf.theta[j] < target) ++j;
  const double a = s * mf.theta[j - 1], b = s * mf.theta[j];
  if (b == a) return mf.gamma[j - 1];
  return mf.gamma[j - 1] + (target - a) / (b - a) * (mf.gamma[j] - mf.gamma[j - 1]);
}

std::vector<double> regret_vs_reference(const FrontierCurve& curve, const FrontierCurve& reference) {
  if (curve.points.size() != reference.points.size() || curve.bound_type != reference.bound_type) {
    throw InputError("regret needs curves on the same lambda grid and bound type");
  }
  const double s = bound_sign(curve.bound_type);
  std::vector<double> out(curve.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = curve.points[i].lambda, b = reference.points[i].lambda;
    if (std::abs(a - b) > 1e-12 * std::max(a, b)) throw InputError("regret needs curves on the same lambda grid");
    out[i] = s * (reference.points[i].objective - curve.points[i].objective);
  }
  return out;
}

int count_gamma_inversions(const FrontierCurve& curve, double z) {
  int n = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    if (a.gamma_star - b.gamma_star > z * std::hypot(a.gamma_se, b.gamma_se)) ++n;
  }
  return n;
}

}  // namespace sensibound
