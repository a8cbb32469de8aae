#include "sensibound/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sensibound/aggregate.hpp"
#include "sensibound/errors.hpp"
#include "sensibound/frontier.hpp"
#include "sensibound/normal.hpp"
#include "sensibound/pipeline.hpp"
#include "sensibound/random.hpp"
#include "sensibound/spline_flow.hpp"

namespace sensibound {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

CheckResult check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

struct ArmPair {
  QueryContext arm[2];
};

std::vector<ArmPair> seeded_rows(std::uint64_t seed, int n) {
  PriorConfig cfg;
  const auto scm = sample_scm(cfg, scm_seed(seed, 0));
  const auto data = sample_dataset(scm, cfg.n_obs, dataset_seed(seed, 0));
  std::vector<ArmPair> rows;
  for (int j = 0; j < n; ++j) {
    ArmPair r;
    for (int a = 0; a < 2; ++a) {
      QueryPoint q{2 * j + a, data.rows[static_cast<std::size_t>(j)].x, a};
      r.arm[a] = query_context(scm, q);
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<CheckResult> oracle_suite(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const CateFn cate = opt.cate ? opt.cate : CateFn(cate_bounds);
  const auto rows = seeded_rows(opt.seed, 3);
  const LatentSampler sobol{LatentSampler::Kind::Sobol};
  const GtsmSpec msm{GtsmSpec::Kind::MSM}, kl{GtsmSpec::Kind::F_KL};

  double worst = 0.0;
  for (int j = 0; j < 2; ++j) {
    const auto& ctx = rows[j].arm[1];
    const MsmClosedForm cf(ctx, 1 << 16, sobol);
    for (double g : {1.5, 3.0}) {
      const Bounds a = cf(g), b = brute_force_bound(ctx, msm, g);
      worst = std::max({worst, std::abs(a.lower - b.lower), std::abs(a.upper - b.upper)});
    }
  }
  out.push_back(check("msm closed form matches brute force", worst <= 1e-3, fmt("max |diff| %.3g", worst)));

  double floor_err = 0.0;
  bool nested = true, inside = true;
  for (const auto& row : rows) {
    for (const auto& ctx : row.arm) {
      const MsmClosedForm cf(ctx, 1 << 14, sobol);
      const Bounds at1 = cf(1.0);
      floor_err = std::max({floor_err, std::abs(at1.lower - cf.q0()), std::abs(at1.upper - cf.q0())});
      const Bounds m = manski_bounds(ctx);
      Bounds prev = at1;
      for (double g : {1.2, 2.0, 5.0, 50.0}) {
        const Bounds b = cf(g);
        nested = nested && b.lower <= prev.lower + 1e-12 && b.upper >= prev.upper - 1e-12;
        inside = inside && b.lower >= m.lower - 1e-9 && b.upper <= m.upper + 1e-9;
        prev = b;
      }
    }
  }
  out.push_back(check("msm bounds collapse to Q0 at the floor", floor_err <= 1e-12, fmt("max |diff| %.3g", floor_err)));
  out.push_back(check("msm intervals nested in gamma", nested, nested ? "ok" : "a larger gamma shrank the interval"));
  out.push_back(check("msm intervals inside manski bounds", inside, inside ? "ok" : "bound outside the no-assumption limit"));

  bool kl_ok = true;
  {
    const auto& ctx = rows[0].arm[0];
    Bounds prev{ctx.q0, ctx.q0};
    for (double g : {0.05, 0.2, 1.0}) {
      const Bounds b = brute_force_bound(ctx, kl, g, 801);
      kl_ok = kl_ok && b.lower <= prev.lower + 1e-6 && b.upper >= prev.upper - 1e-6 && b.lower < b.upper;
      prev = b;
    }
  }
  out.push_back(check("kl brute force nested in gamma", kl_ok, kl_ok ? "ok" : "interval not nested"));

  bool exact = false;
  try {
    const Bounds c = cate(0.0, 1.0, 2.0, 3.0);
    exact = c.lower == 1.0 && c.upper == 3.0;
  } catch (const std::exception&) {
  }
  out.push_back(check("cate of fixed arm intervals", exact, "expects (1, 3) from [0,1] and [2,3]"));

  bool covers = true;
  std::vector<Bounds> per_x;
  double point_ate = 0.0;
  for (const auto& row : rows) {
    Bounds arm[2];
    for (int a = 0; a < 2; ++a) arm[a] = MsmClosedForm(row.arm[a], 1 << 14, sobol)(2.0);
    Bounds c{};
    try {
      c = cate(arm[0].lower, arm[0].upper, arm[1].lower, arm[1].upper);
    } catch (const std::exception&) {
      covers = false;
      continue;
    }
    const double point = row.arm[1].q0 - row.arm[0].q0;
    covers = covers && c.lower <= c.upper && c.lower <= point + 1e-3 && point <= c.upper + 1e-3;
    per_x.push_back(c);
    point_ate += point / static_cast<double>(rows.size());
  }
  if (covers) {
    const Bounds ate = ate_bounds(per_x);
    covers = ate.lower <= point_ate + 1e-3 && point_ate <= ate.upper + 1e-3;
  }
  out.push_back(check("cate and ate bounds contain the point effect", covers,
                      covers ? "ok" : "point effect outside the aggregated interval"));
  return out;
}

std::vector<CheckResult> frontier_suite(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  const auto rows = seeded_rows(opt.seed, 1);
  const auto& ctx = rows[0].arm[1];
  SweepConfig cfg = ablation_sweep_defaults();
  LambdaGrid grid;
  grid.n_points = 12;
  const GtsmSpec kl{GtsmSpec::Kind::F_KL};
  const FrontierCurve up = sweep(ctx, kl, BoundType::Upper, grid, cfg);
  const FrontierCurve lo = sweep(ctx, kl, BoundType::Lower, grid, cfg);

  const auto& u0 = up.points.front();
  const auto& l0 = lo.points.front();
  const double z_hi = std::abs(u0.theta_star - ctx.q0) / std::max(u0.theta_se, 1e-12);
  const double z_lo = std::abs(l0.theta_star - ctx.q0) / std::max(l0.theta_se, 1e-12);
  out.push_back(check("largest lambda stays near Q0", z_hi <= 5.0 && z_lo <= 5.0,
                      fmt("z upper %.2f, lower %.2f", z_hi, z_lo)));

  bool ordered = true, in_manski = true, finite = true;
  for (std::size_t i = 0; i < up.points.size(); ++i) {
    const auto& u = up.points[i];
    const auto& l = lo.points[i];
    ordered = ordered && l.theta_star <= ctx.q0 + 3 * l.theta_se && u.theta_star >= ctx.q0 - 3 * u.theta_se;
    in_manski = in_manski && u.theta_star <= up.manski + 1e-9 && l.theta_star >= lo.manski - 1e-9;
    finite = finite && std::isfinite(u.gamma_star) && std::isfinite(l.gamma_star) && u.gamma_star >= 0 &&
             l.gamma_star >= 0 && !u.degraded && !l.degraded;
  }
  out.push_back(check("points finite and not degraded", finite, finite ? "ok" : "bad point"));
  out.push_back(check("bounds bracket Q0", ordered, ordered ? "ok" : "a bound crossed Q0"));
  out.push_back(check("bounds inside manski limits", in_manski, in_manski ? "ok" : "a bound left the limit"));

  const int inv = count_gamma_inversions(up) + count_gamma_inversions(lo);
  out.push_back(check("gamma* decreases in lambda", inv == 0, fmt("%.0f significant inversions", inv)));

  bool mono = true;
  for (const auto* c : {&up, &lo}) {
    const auto m = isotonic_frontier(*c);
    const double s = bound_sign(c->bound_type);
    for (std::size_t i = 1; i < m.gamma.size(); ++i)
      mono = mono && m.gamma[i] > m.gamma[i - 1] && s * (m.theta[i] - m.theta[i - 1]) >= 0.0;
  }
  out.push_back(check("isotonic projection nested in gamma", mono, mono ? "ok" : "projection not monotone"));

  bool self_zero = true;
  for (double r : regret_vs_reference(up, up)) self_zero = self_zero && r == 0.0;
  out.push_back(check("self regret is zero", self_zero, self_zero ? "ok" : "nonzero"));
  return out;
}

std::vector<CheckResult> flow_suite(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng = make_rng(opt.seed, 0, "verify-flow");
  double round = 0.0, mass = 0.0, grad = 0.0, ident = 0.0;
  for (int c = 0; c < 5; ++c) {
    const auto p = SplineFlowParams::random(rng, 1.0, 8 + 4 * c);
    const SplineFlow f(p);
    for (int i = 0; i <= 400; ++i) {
      const double z = -9.0 + 18.0 * i / 400;
      round = std::max(round, std::abs(f.inverse(f.transform(z).value).value - z));
    }
    // Simpson on every knot interval so sharp bins are resolved
    std::vector<double> edges{-12.0};
    for (double y : f.knots_y()) edges.push_back(y);
    edges.push_back(12.0);
    double s = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
      const int m = 4000;
      const double a = edges[e], h = (edges[e + 1] - a) / m;
      for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * h / 3.0 * std::exp(f.log_density(a + h * i));
      }
    }
    mass = std::max(mass, std::abs(s - 1.0));

    ObjectiveAdjoint adj;
    const double zs[] = {-4.0, -1.3, 0.2, 2.1, 5.1};
    const double vs[] = {-3.2, -0.4, 1.1, 4.0};
    for (double z : zs) adj.forward.push_back({z, 0.7, -0.4});
    for (double v : vs) adj.inverse.push_back({v, 0.3, 0.9});
    auto obj = [&](const SplineFlowParams& q) {
      const SplineFlow g(q);
      double t = 0.0;
      for (double z : zs) {
        const auto e = g.transform(z);
        t += 0.7 * e.value - 0.4 * e.log_abs_det;
      }
      for (double v : vs) {
        const auto e = g.inverse(v);
        t += 0.3 * e.value - 0.9 * e.log_abs_det;
      }
      return t;
    };
    const auto g = parameter_gradients(p, adj);
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
      auto a = p, b = p;
      a.theta[i] += 1e-5;
      b.theta[i] -= 1e-5;
      const double fd = (obj(a) - obj(b)) / 2e-5;
      grad = std::max(grad, std::abs(fd - g[i]) / std::max(1e-2, std::abs(fd)));
    }
  }
  const SplineFlow id(SplineFlowParams::identity());
  for (int i = 0; i <= 200; ++i) {
    const double z = -7.0 + 14.0 * i / 200;
    const auto e = id.transform(z);
    ident = std::max({ident, std::abs(e.value - z), std::abs(e.log_abs_det)});
  }
  out.push_back(check("round trip", round < 1e-5, fmt("max error %.3g", round)));
  out.push_back(check("density integrates to one", mass < 1e-3, fmt("max |mass - 1| %.3g", mass)));
  out.push_back(check("gradients match finite differences", grad < 1e-3, fmt("max relative error %.3g", grad)));
  out.push_back(check("identity initialization", ident < 1e-9, fmt("max deviation %.3g", ident)));
  return out;
}

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names{"oracles", "frontier", "flow"};
  return names;
}

bool is_verify_suite(const std::string& name) {
  const auto& s = verify_suites();
  return std::find(s.begin(), s.end(), name) != s.end();
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, const VerifyOptions& options) {
  if (suite == "oracles") return oracle_suite(options);
  if (suite == "frontier") return frontier_suite(options);
  if (suite == "flow") return flow_suite(options);
  throw InputError("unknown suite '" + suite + "'");
}

Bounds cate_bounds_sign_fault(double lower0, double upper0, double lower1, double upper1) {
  return {lower0 - upper1, upper0 - lower1};
}

}  // namespace sensibound
