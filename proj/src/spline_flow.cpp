#include "sensibound/spline_flow.hpp"

#include <algorithm>
#include <cmath>

#include "sensibound/errors.hpp"
#include "sensibound/normal.hpp"

namespace sensibound {

namespace {

double softplus(double t) { return t > 30.0 ? t : std::log1p(std::exp(t)); }
double sigmoid(double t) { return 0.5 + 0.5 * std::tanh(0.5 * t); }

void softmax(const double* in, int n, std::vector<double>& out) {
  out.resize(n);
  const double m = *std::max_element(in, in + n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += out[i] = std::exp(in[i] - m);
  for (auto& v : out) v /= total;
}

// Partial slots: bin left knot x, width W, bottom knot y, height H, d_k, d_{k+1}.
enum Slot { kX = 0, kW, kY, kH, kD0, kD1, kSlots };

}  // namespace

SplineFlowParams SplineFlowParams::identity(int n_bins, double tail_bound) {
  SplineFlowParams p;
  p.n_bins = n_bins;
  p.tail_bound = tail_bound;
  p.theta.assign(p.size(), 0.0);
  const double d = std::log(std::expm1(1.0 - p.min_derivative));
  for (int k = 0; k <= n_bins; ++k) p.derivatives()[k] = d;
  p.validate();
  return p;
}

SplineFlowParams SplineFlowParams::random(Rng& rng, double scale, int n_bins, double tail_bound) {
  SplineFlowParams p = identity(n_bins, tail_bound);
  for (auto& t : p.theta) t += scale * normal::quantile((static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53);
  return p;
}

void SplineFlowParams::validate() const {
  if (n_bins < 1) throw InputError("spline needs at least one bin");
  if (!(tail_bound > 0.0) || !std::isfinite(tail_bound)) throw InputError("tail bound must be positive");
  if (!(min_bin_width > 0.0 && min_bin_width * n_bins < 1.0)) throw InputError("invalid minimum bin width");
  if (!(min_bin_height > 0.0 && min_bin_height * n_bins < 1.0)) throw InputError("invalid minimum bin height");
  if (!(min_derivative > 0.0)) throw InputError("minimum derivative must be positive");
  if (theta.size() != size()) throw InputError("spline parameter vector has the wrong length");
  for (double t : theta) {
    if (!std::isfinite(t)) throw InputError("spline parameters must be finite");
  }
}

struct SplineFlow::Local {
  double u, ell;
};

SplineFlow::SplineFlow(const SplineFlowParams& p)
    : n_(p.n_bins), bound_(p.tail_bound), min_w_(p.min_bin_width), min_h_(p.min_bin_height) {
  p.validate();
  softmax(p.widths(), n_, pw_);
  softmax(p.heights(), n_, ph_);
  const double span = 2.0 * bound_;
  w_.resize(n_);
  h_.resize(n_);
  xs_.resize(n_ + 1);
  ys_.resize(n_ + 1);
  for (int j = 0; j < n_; ++j) {
    w_[j] = span * (min_w_ + (1.0 - n_ * min_w_) * pw_[j]);
    h_[j] = span * (min_h_ + (1.0 - n_ * min_h_) * ph_[j]);
  }
  xs_[0] = ys_[0] = -bound_;
  for (int j = 1; j < n_; ++j) {
    xs_[j] = xs_[j - 1] + w_[j - 1];
    ys_[j] = ys_[j - 1] + h_[j - 1];
  }
  xs_[n_] = ys_[n_] = bound_;
  ds_.assign(n_ + 1, 1.0);
  sig_.assign(n_ + 1, 0.0);
  for (int k = 1; k < n_; ++k) {
    ds_[k] = p.min_derivative + softplus(p.derivatives()[k]);
    sig_[k] = sigmoid(p.derivatives()[k]);
  }
  clear_gradient();
}

void SplineFlow::clear_gradient() {
  gx_.assign(n_ + 1, 0.0);
  gy_.assign(n_ + 1, 0.0);
  gw_.assign(n_, 0.0);
  gh_.assign(n_, 0.0);
  gd_.assign(n_ + 1, 0.0);
}

int SplineFlow::bin_of(const std::vector<double>& knots, double t) const {
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  return std::clamp(static_cast<int>(it - knots.begin()) - 1, 0, n_ - 1);
}

SplineFlow::Local SplineFlow::local(int k, double xi, Trace* trace) const {
  const double W = w_[k], H = h_[k];
  const double iW = 1.0 / W;
  const double s = H * iW;
  const double d0 = ds_[k], d1 = ds_[k + 1];
  const double q = xi * (1.0 - xi);
  const double c = d0 + d1 - 2.0 * s;
  const double N = s * xi * xi + d0 * q;
  const double D = s + c * q;
  const double iD = 1.0 / D;
  const double A = N * iD;
  const double omx = 1.0 - xi;
  const double M = d1 * xi * xi + 2.0 * s * q + d0 * omx * omx;

  Local L;
  L.u = ys_[k] + H * A;
  L.ell = std::log(s * s * M * iD * iD);
  if (!trace) return L;

  const double iM = 1.0 / M;
  const double N_xi = 2.0 * s * xi + d0 * (1.0 - 2.0 * xi);
  const double D_xi = c * (1.0 - 2.0 * xi);
  const double D_s = 1.0 - 2.0 * q;
  const double A_xi = (N_xi - A * D_xi) * iD;
  const double A_s = (xi * xi - A * D_s) * iD;
  const double A_d0 = (q - A * q) * iD;
  const double A_d1 = -A * q * iD;

  const double M_xi = 2.0 * d1 * xi + 2.0 * s * (1.0 - 2.0 * xi) - 2.0 * d0 * omx;
  const double l_xi = M_xi * iM - 2.0 * D_xi * iD;
  const double l_s = 2.0 / s + 2.0 * q * iM - 2.0 * D_s * iD;
  const double l_d0 = omx * omx * iM - 2.0 * q * iD;
  const double l_d1 = xi * xi * iM - 2.0 * q * iD;

  Trace& t = *trace;
  t.bin = k;
  t.u_z = H * A_xi * iW;
  t.ell_z = l_xi * iW;
  t.up[kX] = -t.u_z;
  t.up[kW] = -H * (A_xi * xi + A_s * s) * iW;
  t.up[kY] = 1.0;
  t.up[kH] = A + H * A_s * iW;
  t.up[kD0] = H * A_d0;
  t.up[kD1] = H * A_d1;
  t.lp[kX] = -t.ell_z;
  t.lp[kW] = -(l_xi * xi + l_s * s) * iW;
  t.lp[kY] = 0.0;
  t.lp[kH] = l_s * iW;
  t.lp[kD0] = l_d0;
  t.lp[kD1] = l_d1;
  return L;
}

FlowEval SplineFlow::transform(double z) const {
  if (!(std::abs(z) < bound_)) return {z, 0.0};
  const int k = bin_of(xs_, z);
  const Local L = local(k, std::clamp((z - xs_[k]) / w_[k], 0.0, 1.0), nullptr);
  return {L.u, L.ell};
}

FlowEval SplineFlow::transform(double z, Trace& trace) const {
  if (!(std::abs(z) < bound_)) {
    trace = Trace{};
    return {z, 0.0};
  }
  const int k = bin_of(xs_, z);
  const Local L = local(k, std::clamp((z - xs_[k]) / w_[k], 0.0, 1.0), &trace);
  return {L.u, L.ell};
}

namespace {

double solve_xi(double du, double H, double s, double d0, double d1) {
  const double c2 = d0 + d1 - 2.0 * s;
  const double a = H * (s - d0) + du * c2;
  const double b = H * d0 - du * c2;
  const double c = -s * du;
  const double disc = std::max(b * b - 4.0 * a * c, 0.0);
  return std::clamp(2.0 * c / (-b - std::sqrt(disc)), 0.0, 1.0);
}

}  // namespace

FlowEval SplineFlow::inverse(double u) const {
  if (!(std::abs(u) < bound_)) return {u, 0.0};
  const int k = bin_of(ys_, u);
  const double xi = solve_xi(u - ys_[k], h_[k], h_[k] / w_[k], ds_[k], ds_[k + 1]);
  const Local L = local(k, xi, nullptr);
  return {xs_[k] + xi * w_[k], -L.ell};
}

FlowEval SplineFlow::inverse(double u, Trace& trace) const {
  if (!(std::abs(u) < bound_)) {
    trace = Trace{};
    return {u, 0.0};
  }
  const int k = bin_of(ys_, u);
  const double xi = solve_xi(u - ys_[k], h_[k], h_[k] / w_[k], ds_[k], ds_[k + 1]);
  const Local L = local(k, xi, &trace);
  return {xs_[k] + xi * w_[k], -L.ell};
}

double SplineFlow::log_density(double u) const {
  const FlowEval inv = inverse(u);
  return normal::log_pdf(inv.value) + inv.log_abs_det;
}

void SplineFlow::scatter(int k, const double* gp) {
  gx_[k] += gp[kX];
  gw_[k] += gp[kW];
  gy_[k] += gp[kY];
  gh_[k] += gp[kH];
  gd_[k] += gp[kD0];
  gd_[k + 1] += gp[kD1];
}

void SplineFlow::accumulate_forward(double z, double adj_u, double adj_ell) {
  Trace t;
  transform(z, t);
  accumulate_forward(t, adj_u, adj_ell);
}

void SplineFlow::accumulate_inverse(double v, double adj_z, double adj_ell) {
  Trace t;
  inverse(v, t);
  accumulate_inverse(t, adj_z, adj_ell);
}

void SplineFlow::accumulate_forward(const Trace& t, double adj_u, double adj_ell) {
  if (t.bin < 0) return;
  double gp[kSlots];
  for (int i = 0; i < kSlots; ++i) gp[i] = adj_u * t.up[i] + adj_ell * t.lp[i];
  scatter(t.bin, gp);
}

void SplineFlow::accumulate_inverse(const Trace& t, double adj_z, double adj_ell) {
  if (t.bin < 0) return;
  // z(p) solves T(z; p) = v, so dz/dp = -u_p / u_z.
  const double carry = (adj_z + adj_ell * t.ell_z) / t.u_z;
  double gp[kSlots];
  for (int i = 0; i < kSlots; ++i) gp[i] = -carry * t.up[i] + adj_ell * t.lp[i];
  scatter(t.bin, gp);
}

std::vector<double> SplineFlow::gradient() const {
  std::vector<double> g(3 * static_cast<std::size_t>(n_) + 1, 0.0);
  // Knot j (0 < j < n) is the running sum of the preceding bin widths.
  std::vector<double> wbar(gw_), hbar(gh_);
  double tail_x = 0.0, tail_y = 0.0;
  for (int j = n_ - 1; j >= 0; --j) {
    if (j + 1 < n_) {
      tail_x += gx_[j + 1];
      tail_y += gy_[j + 1];
    }
    wbar[j] += tail_x;
    hbar[j] += tail_y;
  }
  const double span = 2.0 * bound_;
  auto softmax_back = [&](const std::vector<double>& p, const std::vector<double>& bar, double scale,
                          double* out) {
    double dot = 0.0;
    for (int j = 0; j < n_; ++j) dot += p[j] * bar[j] * scale;
    for (int j = 0; j < n_; ++j) out[j] = p[j] * (bar[j] * scale - dot);
  };
  softmax_back(pw_, wbar, span * (1.0 - n_ * min_w_), g.data());
  softmax_back(ph_, hbar, span * (1.0 - n_ * min_h_), g.data() + n_);
  for (int k = 1; k < n_; ++k) g[2 * n_ + k] = gd_[k] * sig_[k];
  return g;
}

FlowEval transform(const SplineFlowParams& params, double z) { return SplineFlow(params).transform(z); }
FlowEval inverse(const SplineFlowParams& params, double u) { return SplineFlow(params).inverse(u); }
double log_density(const SplineFlowParams& params, double u) { return SplineFlow(params).log_density(u); }

std::vector<double> sample(const SplineFlowParams& params, std::size_t k, const LatentSampler& sampler) {
  if (k < 1) throw InputError("sample size must be >= 1");
  const SplineFlow flow(params);
  auto out = sampler.normals(k);
  for (auto& v : out) v = flow.transform(v).value;
  return out;
}

std::vector<double> parameter_gradients(const SplineFlowParams& params, const ObjectiveAdjoint& adj) {
  SplineFlow flow(params);
  for (const auto& f : adj.forward) {
    if (!std::isfinite(f.adj_u) || !std::isfinite(f.adj_ell)) throw InputError("adjoint values must be finite");
    flow.accumulate_forward(f.z, f.adj_u, f.adj_ell);
  }
  for (const auto& i : adj.inverse) {
    if (!std::isfinite(i.adj_z) || !std::isfinite(i.adj_ell)) throw InputError("adjoint values must be finite");
    flow.accumulate_inverse(i.v, i.adj_z, i.adj_ell);
  }
  return flow.gradient();
}

}  // namespace sensibound
