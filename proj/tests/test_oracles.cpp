#include <doctest.h>

#include "helpers.hpp"
#include "sensibound/errors.hpp"
#include "sensibound/oracles.hpp"
#include "sensibound/pipeline.hpp"

using namespace sensibound;

namespace {

const GtsmSpec kMsm{GtsmSpec::Kind::MSM}, kKl{GtsmSpec::Kind::F_KL};
const LatentSampler kSobol{LatentSampler::Kind::Sobol, 123};

// Curve and propensity shared with tests/oracles/*.py.
QueryContext reference_context() { return testutil::with_q0(testutil::affine_context(0.3, 0.2, 0.8, 0.3, 1.5), 1 << 20); }

std::vector<QueryContext> seeded_queries(int n) {
  std::vector<QueryContext> out;
  for (int d = 0; static_cast<int>(out.size()) < n; ++d) {
    PriorConfig cfg;
    const auto scm = sample_scm(cfg, scm_seed(42, d));
    const auto data = sample_dataset(scm, cfg.n_obs, dataset_seed(42, d));
    for (const auto& q : sample_queries(scm, data, 2, query_seed(42, d))) out.push_back(query_context(scm, q));
  }
  out.resize(n);
  return out;
}

}  // namespace

TEST_CASE("manski bounds of a constructed outcome") {
  // f(u) = u / 8 on [-8, 8]: sup 1, inf -1, Q0 = 0
  auto ctx = testutil::affine_context(0.5, 0.0, 0.125, 0.0, std::numeric_limits<double>::infinity());
  ctx.q0 = 0.0;
  const Bounds m = manski_bounds(ctx);
  CHECK(m.lower == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(m.upper == doctest::Approx(0.5).epsilon(1e-12));

  ctx.pi = 1.0 - 1e-9;
  const Bounds tight = manski_bounds(ctx);
  CHECK(std::abs(tight.lower) < 1e-8);
  CHECK(std::abs(tight.upper) < 1e-8);

  // saturating curve: extremes at the domain edges
  const auto sat = reference_context();
  const Bounds s = manski_bounds(sat);
  CHECK(s.upper == doctest::Approx(0.3 * sat.q0 + 0.7 * sat.curve(8.0)).epsilon(1e-9));
  CHECK(s.lower == doctest::Approx(0.3 * sat.q0 + 0.7 * sat.curve(-8.0)).epsilon(1e-9));
  CHECK(std::abs(s.upper - 0.9866292717378853) < 1e-5);
  CHECK(std::abs(s.lower - -0.693286062650706) < 1e-5);

  // decreasing outcome swaps the edges
  auto neg = sat;
  neg.curve = sat.curve.negated();
  neg.q0 = -sat.q0;
  const Bounds n = manski_bounds(neg);
  CHECK(n.upper == doctest::Approx(-s.lower).epsilon(1e-9));
  CHECK(n.lower == doctest::Approx(-s.upper).epsilon(1e-9));
}

TEST_CASE("manski bounds through an SCM") {
  const PriorConfig cfg;
  const auto scm = sample_scm(cfg, 3);
  const auto data = sample_dataset(scm, 16, 3);
  const QueryPoint q{0, data.rows[0].x, 1};
  const Bounds a = manski_bounds(scm, q, 4096, kSobol);
  const Bounds b = manski_bounds(query_context(scm, q, 4096, 123));
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("msm threshold level") {
  CHECK(msm_threshold_level(1.0, true) == 0.5);
  CHECK(msm_threshold_level(1.0, false) == 0.5);
  CHECK(msm_threshold_level(3.0, true) == doctest::Approx(0.75));
  CHECK(msm_threshold_level(3.0, false) == doctest::Approx(0.25));
  CHECK_THROWS_AS(msm_threshold_level(0.9, true), InputError);
}

TEST_CASE("msm closed form matches adaptive quadrature") {
  // tests/oracles/msm_closed_form.py
  const double ref[][3] = {
      {1.5, -0.11659183270213139, 0.16782869053658794},
      {2.0, -0.20630544041928836, 0.26951762604570395},
      {3.0, -0.31617021986910115, 0.4034149501263506},
      {5.0, -0.4250182142739949, 0.5478148261257789},
  };
  const auto ctx = reference_context();
  CHECK(std::abs(ctx.q0 - 0.022292295007995434) < 1e-6);
  const MsmClosedForm cf(ctx, 1 << 20, kSobol);
  for (const auto& r : ref) {
    const Bounds b = cf(r[0]);
    CHECK(std::abs(b.lower - r[1]) < 2e-5);
    CHECK(std::abs(b.upper - r[2]) < 2e-5);
    const Bounds bf = brute_force_bound(ctx, kMsm, r[0]);
    CHECK(std::abs(bf.lower - r[1]) < 1e-4);
    CHECK(std::abs(bf.upper - r[2]) < 1e-4);
  }
}

TEST_CASE("msm closed form limits") {
  const auto ctx = reference_context();
  const MsmClosedForm cf(ctx, 1 << 16, kSobol);
  const Bounds one = cf(1.0);
  CHECK(one.lower == doctest::Approx(cf.q0()).epsilon(1e-14));
  CHECK(one.upper == doctest::Approx(cf.q0()).epsilon(1e-14));
  const Bounds big = cf(1e6);
  const Bounds m = manski_bounds(ctx);
  CHECK(std::abs(big.upper - m.upper) < 1e-2);
  CHECK(std::abs(big.lower - m.lower) < 1e-2);
  CHECK_THROWS_AS(cf(0.99), InputError);
  CHECK_THROWS_AS(cf(std::numeric_limits<double>::infinity()), InputError);
  CHECK_THROWS_AS(msm_closed_form(ctx, 0.5, 128, kSobol), InputError);
}

TEST_CASE("msm closed form is monotone and continuous in gamma") {
  for (const auto& ctx : seeded_queries(6)) {
    const MsmClosedForm cf(ctx, 1 << 14, kSobol);
    const Bounds m = manski_bounds(ctx);
    Bounds prev = cf(1.0);
    for (double g = 1.05; g <= 20.0; g *= 1.05) {
      const Bounds b = cf(g);
      CHECK(b.upper >= prev.upper - 1e-12);
      CHECK(b.lower <= prev.lower + 1e-12);
      CHECK(b.upper - prev.upper <= 0.1 * (m.upper - m.lower));
      CHECK(prev.lower - b.lower <= 0.1 * (m.upper - m.lower));
      prev = b;
    }
  }
}

TEST_CASE("msm closed form against brute force on prior queries") {
  for (const auto& ctx : seeded_queries(4)) {
    const MsmClosedForm cf(ctx, 1 << 16, kSobol);
    for (double g : {1.5, 2.0, 3.0, 5.0}) {
      const Bounds a = cf(g), b = brute_force_bound(ctx, kMsm, g);
      CHECK(std::abs(a.lower - b.lower) < 1e-3);
      CHECK(std::abs(a.upper - b.upper) < 1e-3);
    }
  }
  // a decreasing outcome uses the mirrored threshold
  auto ctx = reference_context();
  ctx.curve = ctx.curve.negated();
  ctx.q0 = -ctx.q0;
  const Bounds a = MsmClosedForm(ctx, 1 << 18, kSobol)(2.0), b = brute_force_bound(ctx, kMsm, 2.0);
  CHECK(std::abs(a.lower - b.lower) < 1e-4);
  CHECK(std::abs(a.upper - b.upper) < 1e-4);
  CHECK(a.upper == doctest::Approx(0.20630544041928836).epsilon(1e-4));
}

TEST_CASE("KL brute force matches an independent convex solver") {
  // tests/oracles/kl_brute_force.py (CLARABEL), same grid and curve
  const double ref[][3] = {
      {0.05, -0.10567665850471504, 0.15561495844805978},
      {0.1, -0.15608889900686715, 0.2111189488960539},
      {0.2, -0.2240533919417706, 0.289102178771055},
      {0.5, -0.3452660301302568, 0.4381168036203773},
      {1.0, -0.45722932184008663, 0.589530548680249},
  };
  const auto ctx = reference_context();
  for (const auto& r : ref) {
    const Bounds b = brute_force_bound(ctx, kKl, r[0]);
    CHECK(std::abs(b.lower - r[1]) < 1e-5);
    CHECK(std::abs(b.upper - r[2]) < 1e-5);
  }
}

TEST_CASE("KL brute force at zero and in gamma") {
  const auto ctx = reference_context();
  const Bounds zero = brute_force_bound(ctx, kKl, 0.0);
  CHECK(zero.lower == doctest::Approx(zero.upper).epsilon(1e-9));
  CHECK(std::abs(zero.upper - ctx.q0) < 1e-5);
  Bounds prev = zero;
  for (double g : {0.05, 0.1, 0.2, 0.5}) {
    const Bounds b = brute_force_bound(ctx, kKl, g);
    CHECK(b.upper >= prev.upper);
    CHECK(b.lower <= prev.lower);
    prev = b;
  }
}

TEST_CASE("brute force argument checks") {
  const auto ctx = reference_context();
  CHECK_THROWS_AS(brute_force_bound(ctx, kMsm, 0.5), DomainError);
  CHECK_THROWS_AS(brute_force_bound(ctx, kKl, -0.1), DomainError);
  CHECK_THROWS_AS(brute_force_bound(ctx, {GtsmSpec::Kind::Rosenbaum}, 2.0), InputError);
  CHECK_THROWS_AS(brute_force_bound(ctx, kMsm, 2.0, 100), InputError);
}

TEST_CASE("oracle ordering on seeded queries") {
  for (const auto& ctx : seeded_queries(20)) {
    const Bounds m = manski_bounds(ctx);
    const Bounds cf = msm_closed_form(ctx, 2.0, 1 << 14, kSobol);
    const Bounds bm = brute_force_bound(ctx, kMsm, 2.0, 801);
    const Bounds bk = brute_force_bound(ctx, kKl, 0.2, 801);
    for (const Bounds& b : {cf, bm, bk}) {
      CHECK(m.lower <= b.lower + 1e-6);
      CHECK(b.lower <= ctx.q0 + 1e-4);
      CHECK(ctx.q0 <= b.upper + 1e-4);
      CHECK(b.upper <= m.upper + 1e-6);
    }
  }
}
