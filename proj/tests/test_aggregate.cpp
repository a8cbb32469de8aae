#include <doctest.h>

#include <algorithm>
#include <random>

#include "sensibound/aggregate.hpp"
#include "sensibound/errors.hpp"

using namespace sensibound;

TEST_CASE("cate interval from arm intervals") {
  const Bounds b = cate_bounds(0.0, 1.0, -1.0, 2.0);
  CHECK(b.lower == -2.0);
  CHECK(b.upper == 2.0);
  const Bounds p = cate_bounds(0.3, 0.3, 1.1, 1.1);
  CHECK(p.upper - p.lower == 0.0);
  CHECK(p.lower == doctest::Approx(0.8));
  CHECK_THROWS_AS(cate_bounds(1.0, 0.0, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(cate_bounds(0.0, 1.0, 0.0, std::nan("")), InputError);
}

TEST_CASE("cate width is the sum of arm widths") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const double l0 = u(rng), w0 = w(rng), l1 = u(rng), w1 = w(rng);
    const Bounds b = cate_bounds(l0, l0 + w0, l1, l1 + w1);
    CHECK(b.upper - b.lower == doctest::Approx(w0 + w1).epsilon(1e-12));
  }
}

TEST_CASE("averaged intervals") {
  const std::vector<Bounds> v{{0.0, 1.0}, {1.0, 2.0}, {2.0, 3.0}};
  const Bounds m = apo_bounds(v);
  CHECK(m.lower == 1.0);
  CHECK(m.upper == 2.0);
  const Bounds one = ate_bounds({{-0.5, 0.25}});
  CHECK(one.lower == -0.5);
  CHECK(one.upper == 0.25);
  CHECK_THROWS_AS(apo_bounds({}), InputError);
  CHECK_THROWS_AS(ate_bounds({}), InputError);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Bounds> many(17);
  for (auto& b : many) {
    b.lower = u(rng);
    b.upper = b.lower + 0.5 * (u(rng) + 1.0);
  }
  const Bounds ref = ate_bounds(many);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(many.begin(), many.end(), rng);
    const Bounds s = ate_bounds(many);
    CHECK(s.lower == doctest::Approx(ref.lower).epsilon(1e-14));
    CHECK(s.upper == doctest::Approx(ref.upper).epsilon(1e-14));
  }
}

TEST_CASE("aggregated intervals contain aggregates of admissible values") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.0, 1.0), t(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 12);
    std::vector<Bounds> arm0(m), arm1(m), cates(m);
    double effect = 0.0, apo1 = 0.0;
    for (int i = 0; i < m; ++i) {
      arm0[i].lower = u(rng);
      arm0[i].upper = arm0[i].lower + w(rng);
      arm1[i].lower = u(rng);
      arm1[i].upper = arm1[i].lower + w(rng);
      cates[i] = cate_bounds(arm0[i].lower, arm0[i].upper, arm1[i].lower, arm1[i].upper);
      const double y0 = arm0[i].lower + t(rng) * (arm0[i].upper - arm0[i].lower);
      const double y1 = arm1[i].lower + t(rng) * (arm1[i].upper - arm1[i].lower);
      effect += (y1 - y0) / m;
      apo1 += y1 / m;
    }
    const Bounds ate = ate_bounds(cates), apo = apo_bounds(arm1);
    CHECK(ate.lower <= effect + 1e-12);
    CHECK(effect <= ate.upper + 1e-12);
    CHECK(apo.lower <= apo1 + 1e-12);
    CHECK(apo1 <= apo.upper + 1e-12);
  }
}
