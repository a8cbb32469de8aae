#include "sensibound/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "sensibound/errors.hpp"
#include "sensibound/normal.hpp"

namespace sensibound {

namespace {

constexpr double kManskiEdge = 8.0;
constexpr int kManskiGrid = 2001;
constexpr double kBruteEdge = 6.0;

// Golden-section refinement of a maximum bracketed by [a, b].
double refine_max(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::max({fc, fd, f(a), f(b)});
}

double grid_extreme(const OutcomeCurve& curve, double sign) {
  const auto f = [&](double u) { return sign * curve(u); };
  const double step = 2.0 * kManskiEdge / (kManskiGrid - 1);
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kManskiGrid; ++i) {
    const double v = f(-kManskiEdge + step * i);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double a = -kManskiEdge + step * std::max(best - 1, 0);
  const double b = -kManskiEdge + step * std::min(best + 1, kManskiGrid - 1);
  return sign * std::max(best_v, refine_max(f, a, b));
}

struct Grid {
  std::vector<double> u, w, f;
  double q0 = 0.0;
};

Grid make_grid(const OutcomeCurve& curve, int n) {
  Grid g;
  g.u.resize(n);
  g.w.resize(n);
  g.f.resize(n);
  const double h = 2.0 * kBruteEdge / (n - 1);
  for (int i = 0; i < n; ++i) {
    g.u[i] = -kBruteEdge + h * i;
    g.w[i] = normal::pdf(g.u[i]) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
    g.f[i] = curve(g.u[i]);
  }
  const double total = std::accumulate(g.w.begin(), g.w.end(), 0.0);
  for (auto& w : g.w) w /= total;
  for (int i = 0; i < n; ++i) g.q0 += g.w[i] * g.f[i];
  return g;
}

// Weighted Euclidean projection onto {lo <= r <= hi, sum w r = 1}: r = clamp(y - mu).
void project_box(const Grid& g, const std::vector<double>& y, double lo, double hi, std::vector<double>& r) {
  const auto mass = [&](double mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += g.w[i] * std::clamp(y[i] - mu, lo, hi);
    return s;
  };
  const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
  double a = *ymin - hi, b = *ymax - lo;  // mass(a) = hi >= 1, mass(b) = lo <= 1
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    (mass(m) > 1.0 ? a : b) = m;
  }
  const double mu = 0.5 * (a + b);
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = std::clamp(y[i] - mu, lo, hi);
}

double msm_brute_upper(const Grid& g, double gamma) {
  const std::size_t n = g.u.size();
  std::vector<double> r(n, 1.0), y(n), prev(n);
  const double lo = 1.0 / gamma, hi = gamma;
  double step = 1.0;
  for (int it = 0; it < 400; ++it) {
    prev = r;
    for (std::size_t i = 0; i < n; ++i) y[i] = r[i] + step * g.f[i];
    project_box(g, y, lo, hi, r);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(r[i] - prev[i]));
    if (change < 1e-13 && it > 2) break;
    // past ~1e6 the mu bisection can no longer resolve the fractional threshold cell
    step = std::min(2.0 * step, 1e6);
  }
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) v += g.w[i] * r[i] * g.f[i];
  return v;
}

// KL brute force: the optimal ratio satisfies, coordinate-wise,
//   eta1 * log r - eta2 / r = f - mu - eta1,
// with mu normalizing sum w r = 1 and (eta1, eta2) >= 0 the multipliers of
// the forward (sum w r log r) and reverse (-sum w log r) constraints.
struct KlSolver {
  const Grid& g;
  double gamma;
  std::vector<double> s;  // log r

  double fwd() const {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += g.w[i] * std::exp(s[i]) * s[i];
    return v;
  }
  double rev() const {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v -= g.w[i] * s[i];
    return v;
  }
  double value() const {
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += g.w[i] * std::exp(s[i]) * g.f[i];
    return v;
  }

  // Exponential tilt (eta2 = 0).
  void tilt(double eta1) {
    const double fmax = *std::max_element(g.f.begin(), g.f.end());
    double lse = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) lse += g.w[i] * std::exp((g.f[i] - fmax) / eta1);
    lse = std::log(lse);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (g.f[i] - fmax) / eta1 - lse;
  }

  static double solve_coord(double eta1, double eta2, double b) {
    // h(s) = eta1 s - eta2 exp(-s) - b is increasing and concave, so Newton
    // from a point left of the root climbs monotonically.
    if (eta1 == 0.0) return std::log(eta2 / -b);
    double x;
    if (b >= 0.0) {
      x = b / eta1;
    } else {
      const double alt = -std::log(-b / eta2);
      x = alt <= 0.0 ? alt : 0.0;
    }
    for (int it = 0; it < 200; ++it) {
      const double e = eta2 * std::exp(-x);
      const double h = eta1 * x - e - b;
      const double dx = -h / (eta1 + e);
      x += dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
  }

  // General case (eta2 > 0): find mu with sum w r = 1.
  void solve(double eta1, double eta2) {
    if (eta2 == 0.0) {
      tilt(eta1);
      return;
    }
    const auto [fmin, fmax] = std::minmax_element(g.f.begin(), g.f.end());
    double a = *fmin + eta2 - eta1, b = *fmax + eta2 - eta1;  // mass(a) >= 1 >= mass(b)
    if (eta1 == 0.0) a = std::max(a, std::nextafter(*fmax, std::numeric_limits<double>::infinity()));
    double mu = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
      double mass = 0.0, dmass = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double bi = g.f[i] - mu - eta1;
        s[i] = solve_coord(eta1, eta2, bi);
        const double r = std::exp(s[i]);
        mass += g.w[i] * r;
        dmass -= g.w[i] * r / (eta1 + eta2 / r);
      }
      if (std::abs(mass - 1.0) < 1e-14) break;
      (mass > 1.0 ? a : b) = mu;
      double next = mu - (mass - 1.0) / dmass;
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (b - a < 1e-15 * std::max(1.0, std::abs(mu))) break;
      mu = next;
    }
  }

  // Illinois root finding of phi(x) = target on an increasing function.
  template <class F>
  static double illinois(F&& phi, double a, double b) {
    double fa = phi(a), fb = phi(b);
    int side = 0;
    for (int it = 0; it < 200; ++it) {
      const double c = (a * fb - b * fa) / (fb - fa);
      const double fc = phi(c);
      if (std::abs(fc) < 1e-11 || std::abs(b - a) < 1e-13) return c;
      if ((fc > 0.0) == (fb > 0.0)) {
        b = c;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      } else {
        a = c;
        fa = fc;
        if (side == 1) fb *= 0.5;
        side = 1;
      }
    }
    return 0.5 * (a + b);
  }

  // Best eta1 for fixed eta2: the smallest eta1 >= 0 with fwd <= gamma.
  double inner(double eta2) {
    if (eta2 > 0.0) {
      solve(0.0, eta2);
      if (fwd() <= gamma) return 0.0;
    }
    double hi = 1.0;
    for (;;) {
      solve(hi, eta2);
      if (fwd() <= gamma || hi > 1e12) break;
      hi *= 4.0;
    }
    double lo = hi;
    for (;;) {
      lo *= 0.25;
      solve(lo, eta2);
      if (fwd() > gamma) break;
      if (lo < 1e-14) return lo;
    }
    const double x = illinois(
        [&](double t) {
          solve(std::exp(t), eta2);
          return gamma - fwd();
        },
        std::log(lo), std::log(hi));
    solve(std::exp(x), eta2);
    return std::exp(x);
  }

  double run() {
    s.assign(g.u.size(), 0.0);
    if (gamma == 0.0) return value();
    inner(0.0);
    if (rev() <= gamma) return value();
    // Reverse constraint binds: raise eta2 until rev = gamma.
    double hi = 1e-3;
    for (;;) {
      inner(hi);
      if (rev() <= gamma || hi > 1e12) break;
      hi *= 4.0;
    }
    double lo = hi;
    for (;;) {
      lo *= 0.25;
      inner(lo);
      if (rev() > gamma) break;
      if (lo < 1e-14) return value();
    }
    const double x = illinois(
        [&](double t) {
          inner(std::exp(t));
          return gamma - rev();
        },
        std::log(lo), std::log(hi));
    inner(std::exp(x));
    return value();
  }
};

double mixture(const QueryContext& ctx, double q0, double arm) { return ctx.pi * q0 + (1.0 - ctx.pi) * arm; }

}  // namespace

Bounds manski_bounds(const QueryContext& ctx) {
  return {mixture(ctx, ctx.q0, grid_extreme(ctx.curve, -1.0)), mixture(ctx, ctx.q0, grid_extreme(ctx.curve, 1.0))};
}

Bounds manski_bounds(const StructuralCausalModel& scm, const QueryPoint& q, int k, const LatentSampler& sampler) {
  if (k < 1) throw InputError("k must be >= 1");
  QueryContext ctx = query_context(scm, q, 1, sampler.seed);
  ctx.q0 = point_identified_capo(ctx.curve, k, sampler);
  return manski_bounds(ctx);
}

double msm_threshold_level(double gamma, bool upper) {
  if (!(gamma >= 1.0)) throw InputError("MSM sensitivity level must be >= 1");
  if (std::isinf(gamma)) return upper ? 1.0 : 0.0;
  return upper ? gamma / (gamma + 1.0) : 1.0 / (gamma + 1.0);
}

MsmClosedForm::MsmClosedForm(const QueryContext& ctx, int k, const LatentSampler& sampler) : ctx_(ctx) {
  if (k < 1) throw InputError("k must be >= 1");
  const auto u = sampler.normals(k);
  f_.resize(k);
  for (int i = 0; i < k; ++i) f_[i] = ctx.curve(u[i]);
  std::sort(f_.begin(), f_.end());
  prefix_.assign(k + 1, 0.0);
  for (int i = 0; i < k; ++i) prefix_[i + 1] = prefix_[i] + f_[i];
  q0_ = prefix_[k] / k;
}

double MsmClosedForm::arm_bound(double gamma, bool upper) const {
  // Sample quantile with a fractional threshold cell: the Gamma-weighted tail holds
  // exactly 1/(Gamma+1) of the draws, so the weights average to 1 on the sample.
  // A population quantile leaves the tail empty once k/(Gamma+1) < 1.
  const double k = static_cast<double>(f_.size());
  const double tail = upper ? 1.0 - msm_threshold_level(gamma, true) : msm_threshold_level(gamma, false);
  const double t = tail * k;
  const std::size_t j = std::min(static_cast<std::size_t>(t), f_.size());
  const double frac = t - static_cast<double>(j);
  double heavy;
  if (upper) {
    heavy = prefix_.back() - prefix_[f_.size() - j];
    if (j < f_.size()) heavy += frac * f_[f_.size() - 1 - j];
  } else {
    heavy = prefix_[j];
    if (j < f_.size()) heavy += frac * f_[j];
  }
  return (gamma * heavy + (prefix_.back() - heavy) / gamma) / k;
}

Bounds MsmClosedForm::operator()(double gamma) const {
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw InputError("MSM sensitivity level must be finite and >= 1");
  return {mixture(ctx_, q0_, arm_bound(gamma, false)), mixture(ctx_, q0_, arm_bound(gamma, true))};
}

Bounds msm_closed_form(const QueryContext& ctx, double gamma, int k, const LatentSampler& sampler) {
  if (!(gamma >= 1.0)) throw InputError("MSM sensitivity level must be >= 1");
  return MsmClosedForm(ctx, k, sampler)(gamma);
}

Bounds msm_closed_form(const StructuralCausalModel& scm, const QueryPoint& q, double gamma, int k,
                       const LatentSampler& sampler) {
  return msm_closed_form(query_context(scm, q, 1, sampler.seed), gamma, k, sampler);
}

Bounds brute_force_bound(const QueryContext& ctx, const GtsmSpec& spec, double gamma, int grid_size) {
  if (grid_size < 101) throw InputError("brute-force grid needs >= 101 points");
  if (spec.kind == GtsmSpec::Kind::Rosenbaum) throw InputError("brute force supports MSM and F_KL only");
  if (!(gamma >= spec.floor())) throw DomainError("sensitivity level below the model floor is infeasible");
  const Grid up = make_grid(ctx.curve, grid_size);
  const Grid down = make_grid(ctx.curve.negated(), grid_size);
  double hi, lo;
  if (spec.kind == GtsmSpec::Kind::MSM) {
    hi = msm_brute_upper(up, gamma);
    lo = -msm_brute_upper(down, gamma);
  } else {
    hi = KlSolver{up, gamma, {}}.run();
    lo = -KlSolver{down, gamma, {}}.run();
  }
  return {mixture(ctx, up.q0, lo), mixture(ctx, up.q0, hi)};
}

Bounds brute_force_bound(const StructuralCausalModel& scm, const QueryPoint& q, const GtsmSpec& spec, double gamma,
                         int grid_size) {
  return brute_force_bound(query_context(scm, q), spec, gamma, grid_size);
}

}  // namespace sensibound
