#include "sensibound/gtsm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "sensibound/errors.hpp"
#include "sensibound/normal.hpp"

namespace sensibound {

namespace {

constexpr double kRatioFloor = 1e-12;

void check_finite(double log_r, double u) {
  if (!std::isfinite(log_r)) {
    std::ostringstream msg;
    msg << "non-finite density ratio at u = " << u;
    throw NumericalError(msg.str());
  }
}

struct Moments {
  double mean = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

double trapezoid(const std::vector<double>& u, const std::vector<double>& f) {
  double acc = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) acc += 0.5 * (f[i] + f[i - 1]) * (u[i] - u[i - 1]);
  return acc;
}

}  // namespace

std::string GtsmSpec::name() const {
  switch (kind) {
    case Kind::MSM: return "msm";
    case Kind::F_KL: return "f-kl";
    case Kind::Rosenbaum: return "rosenbaum";
  }
  return "?";
}

GtsmSpec GtsmSpec::parse(const std::string& name) {
  if (name == "msm") return {Kind::MSM};
  if (name == "f-kl" || name == "kl") return {Kind::F_KL};
  if (name == "rosenbaum") return {Kind::Rosenbaum};
  throw InputError("unknown sensitivity model: " + name);
}

double log_density_ratio(const SplineFlow& flow, double u) {
  return flow.log_density(u) - normal::log_pdf(u);
}

double density_ratio(const SplineFlow& flow, double u) {
  if (!std::isfinite(u)) throw InputError("density ratio requires finite u");
  return std::exp(log_density_ratio(flow, u));
}

double density_ratio(const SplineFlowParams& params, double u) { return density_ratio(SplineFlow(params), u); }

std::vector<double> extremum_grid(double tail_bound, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = -tail_bound + 2.0 * tail_bound * i / (n - 1);
  return g;
}

DivergenceEstimate divergence_mc(const GtsmSpec& spec, const SplineFlowParams& params, std::size_t k,
                                 const LatentSampler& sampler, ReverseKl reverse) {
  if (k < 2) throw InputError("divergence estimate needs k >= 2");
  const SplineFlow flow(params);
  const auto z = sampler.normals(k);
  // Log ratios at nu-samples u = T(z) and at phi-samples v = z.
  std::vector<double> at_nu(k), at_phi(k);
  for (std::size_t i = 0; i < k; ++i) {
    const FlowEval f = flow.transform(z[i]);
    at_nu[i] = 0.5 * (f.value * f.value - z[i] * z[i]) - f.log_abs_det;
    check_finite(at_nu[i], f.value);
    at_phi[i] = log_density_ratio(flow, z[i]);
    check_finite(at_phi[i], z[i]);
  }
  DivergenceEstimate est;
  est.n_samples = k;
  est.estimator = DivergenceEstimate::Estimator::MC;

  if (spec.kind == GtsmSpec::Kind::F_KL) {
    const Moments fwd = moments(at_nu);
    Moments rev;
    if (reverse == ReverseKl::Direct) {
      std::vector<double> neg(k);
      for (std::size_t i = 0; i < k; ++i) neg[i] = -at_phi[i];
      rev = moments(neg);
    } else {
      double num = 0.0, den = 0.0;
      for (double lr : at_nu) {
        const double w = 1.0 / std::max(std::exp(lr), kRatioFloor);
        num += w * -lr;
        den += w;
      }
      rev.mean = num / den;
    }
    const bool forward_active = fwd.mean >= rev.mean;
    est.value = std::max(0.0, forward_active ? fwd.mean : rev.mean);
    est.std_error = forward_active ? fwd.se : rev.se;
    return est;
  }

  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  auto visit = [&](double lr) {
    hi = std::max(hi, lr);
    lo = std::min(lo, lr);
  };
  for (double lr : at_nu) visit(lr);
  for (double lr : at_phi) visit(lr);
  for (double g : extremum_grid(params.tail_bound)) {
    const double lr = log_density_ratio(flow, g);
    check_finite(lr, g);
    visit(lr);
  }
  if (spec.kind == GtsmSpec::Kind::MSM) {
    est.value = std::exp(std::max({hi, -lo, 0.0}));
  } else {
    est.value = std::exp(std::max(hi - lo, 0.0));
  }
  return est;
}

double f_kl_on_grid(const std::vector<double>& u, const std::vector<double>& density) {
  if (u.size() != density.size() || u.size() < 3) throw InputError("grid density needs matching sizes >= 3");
  const double mass = trapezoid(u, density);
  std::vector<double> phi(u.size()), fwd(u.size()), rev(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) phi[i] = normal::pdf(u[i]);
  const double phi_mass = trapezoid(u, phi);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = std::max(density[i] / mass, 0.0);
    const double f = phi[i] / phi_mass;
    fwd[i] = p > 0.0 ? p * std::log(p / f) : 0.0;
    rev[i] = f * std::log(f / std::max(p, kRatioFloor * f));
  }
  return std::max({trapezoid(u, fwd), trapezoid(u, rev), 0.0});
}

DivergenceEstimate divergence_quadrature(const GtsmSpec& spec, const SplineFlowParams& params, int grid) {
  if (grid < 101) throw InputError("quadrature grid needs >= 101 points");
  const SplineFlow flow(params);
  const double edge = params.tail_bound + 4.0;
  std::vector<double> u(grid), lr(grid);
  for (int i = 0; i < grid; ++i) {
    u[i] = -edge + 2.0 * edge * i / (grid - 1);
    lr[i] = log_density_ratio(flow, u[i]);
    check_finite(lr[i], u[i]);
  }
  DivergenceEstimate est;
  est.n_samples = static_cast<std::size_t>(grid);
  est.estimator = DivergenceEstimate::Estimator::Quadrature;
  const auto [lo, hi] = std::minmax_element(lr.begin(), lr.end());
  switch (spec.kind) {
    case GtsmSpec::Kind::MSM: est.value = std::exp(std::max({*hi, -*lo, 0.0})); break;
    case GtsmSpec::Kind::Rosenbaum: est.value = std::exp(std::max(*hi - *lo, 0.0)); break;
    case GtsmSpec::Kind::F_KL: {
      std::vector<double> fwd(grid), rev(grid);
      for (int i = 0; i < grid; ++i) {
        const double phi = normal::pdf(u[i]);
        fwd[i] = phi * std::exp(lr[i]) * lr[i];
        rev[i] = -phi * lr[i];
      }
      est.value = std::max({trapezoid(u, fwd), trapezoid(u, rev), 0.0});
      break;
    }
  }
  return est;
}

}  // namespace sensibound
