#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sensibound/normal.hpp"
#include "sensibound/prior.hpp"
#include "sensibound/spline_flow.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sensibound-" + tag + "-" + std::to_string(rd()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Kolmogorov-Smirnov distance of a sample to the standard normal.
inline double ks_normal(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = sensibound::normal::cdf(x[i]);
    d = std::max({d, c - i / n, (i + 1) / n - c});
  }
  return d;
}

// Asymptotic KS critical value at level 0.001.
inline double ks_critical_001(std::size_t n) { return 1.9495 / std::sqrt(static_cast<double>(n)); }

// 16-bin flow on [-6, 6] whose map is z + mu on [-4.5, 4.5]; the two outer
// bins on each side absorb the shift. nu is N(mu, 1) away from the tails.
inline sensibound::SplineFlowParams shifted_flow(double mu) {
  auto p = sensibound::SplineFlowParams::identity(16, 6.0);
  const double span = 12.0, n = 16.0;
  for (int j = 0; j < 16; ++j) {
    const double h = (j < 2) ? 0.75 + 0.5 * mu : (j >= 14 ? 0.75 - 0.5 * mu : 0.75);
    p.heights()[j] = std::log((h / span - p.min_bin_height) / (1.0 - n * p.min_bin_height));
  }
  return p;
}

inline sensibound::QueryContext affine_context(double pi, double offset, double slope, double shift, double sat) {
  sensibound::QueryContext ctx;
  ctx.pi = pi;
  ctx.curve = {offset, slope, shift, sat};
  return ctx;
}

// Query context with Q0 filled by k Sobol draws.
sensibound::QueryContext with_q0(sensibound::QueryContext ctx, int k = 1 << 16);

}  // namespace testutil
