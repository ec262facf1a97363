#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfbwalk/absorption_engine.hpp"
#include "mfbwalk/oracle.hpp"
#include "mfbwalk/visit_engine.hpp"
#include "support/model_gen.hpp"

#include <algorithm>
#include <cmath>

using namespace mfbwalk;
using mfbwalk::testing::cfg_drift;
using mfbwalk::testing::cfg_sym;
using mfbwalk::testing::ModelGenerator;

namespace {

bool has_kind(const Diagnostics &d, DiagnosticKind kind) {
  return std::any_of(d.begin(), d.end(),
                     [&](const Diagnostic &x) { return x.kind == kind; });
}

} // namespace

TEST_CASE("CFG-SYM expected arrivals") {
  const WalkModel m = validate_model(cfg_sym());
  // C1 = K2 = 8 / (xi1 - xi2) = 4 / sqrt(3)
  const double x0 = 4.0 / std::sqrt(3.0);
  const double x2 = 2.0 * (2.0 - std::sqrt(3.0)) / std::sqrt(0.75);
  CHECK(barrier_visits(m, 0) == doctest::Approx(x0).epsilon(1e-14));
  CHECK(barrier_visits(m, 1) == doctest::Approx(x2).epsilon(1e-13));
  CHECK(barrier_visits(m, -1) == doctest::Approx(x2).epsilon(1e-13));
  CHECK(barrier_visits(m, 0) == doctest::Approx(2.309401).epsilon(1e-6));
  CHECK(barrier_visits(m, 1) == doctest::Approx(0.618802).epsilon(1e-6));
  CHECK(site_visits(m, 1) == doctest::Approx(0.25 * (x2 + x0)).epsilon(1e-13));
  CHECK(site_visits(m, 1) == doctest::Approx(0.732051).epsilon(1e-6));

  // q0 x_2 - (p0 + q0 + N s0) x_0 + p0 x_-2 = i0 - N at k = 0
  const double lhs = 0.25 * x2 - 1.0 * x0 + 0.25 * x2;
  CHECK(lhs == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(std::abs(barrier_recurrence_residual(m, 0)) < 1e-12);
}

TEST_CASE("CFG-DRIFT golden values") {
  // 40-digit truncated solve (K = 45) computed independently of this code.
  const WalkModel m = validate_model(cfg_drift());
  CHECK(site_visits(m, -2) == doctest::Approx(0.50210032135380631).epsilon(1e-13));
  CHECK(site_visits(m, -1) == doctest::Approx(1.1122779563076702).epsilon(1e-13));
  CHECK(site_visits(m, 0) == doctest::Approx(2.8347335475692042).epsilon(1e-13));
  CHECK(site_visits(m, 1) == doctest::Approx(1.2796447300922723).epsilon(1e-13));
  CHECK(site_visits(m, 2) == doctest::Approx(1.0042006427076126).epsilon(1e-13));
}

TEST_CASE("printed barrier solution agrees with the boundary system") {
  ModelGenerator gen(21);
  for (int t = 0; t < 200; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    Diagnostics d;
    for (std::int64_t k = -4; k <= 4; ++k)
      (void)barrier_visits(m, k, &d);
    INFO("model " << t);
    CHECK(d.empty());
  }
}

TEST_CASE("printed interval formula is wrong away from the start interval") {
  const WalkModel m = validate_model(cfg_drift());
  Diagnostics d;
  (void)site_visits(m, 1, &d);
  CHECK(d.empty());
  (void)site_visits(m, 3, &d);
  REQUIRE(has_kind(d, DiagnosticKind::FormulaDiscrepancy));
  CHECK(d.front().authoritative == doctest::Approx(site_visits(m, 3)));
  CHECK(d.front().alternative == doctest::Approx(printed_site_visits(m, 3)));

  const WalkModel sym = validate_model(cfg_sym());
  Diagnostics ds;
  for (std::int64_t j = -6; j <= 6; ++j)
    (void)site_visits(sym, j, &ds);
  CHECK(ds.empty());
}

TEST_CASE("start-interval branches agree at the start site") {
  ModelGenerator gen(22);
  for (int t = 0; t < 200; ++t) {
    RawParameters raw = t % 2 ? gen.drift() : gen.balanced();
    raw.N = std::max<std::int64_t>(raw.N, 3);
    raw.i0 = gen.integer(1, raw.N - 1);
    const WalkModel m = validate_model(raw);
    Diagnostics d;
    (void)site_visits(m, m.i0(), &d);
    CHECK_FALSE(has_kind(d, DiagnosticKind::ConsistencyFailure));
  }
}

TEST_CASE("absorption masses") {
  const WalkModel sym = validate_model(cfg_sym());
  CHECK(absorption_mass(sym, 0) == doctest::Approx(0.577350).epsilon(1e-6));
  CHECK(absorption_mass(sym, 1) == doctest::Approx(absorption_mass(sym, -1)).epsilon(1e-14));
  CHECK(absorption_mass(sym, 2) == doctest::Approx(absorption_mass(sym, -2)).epsilon(1e-14));
  CHECK(total_absorption(sym) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(total_absorption(validate_model(cfg_drift())) - 1.0) < 1e-10);
}

TEST_CASE("total absorption is one on random models") {
  ModelGenerator gen(23);
  for (int t = 0; t < 100; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    REQUIRE(std::abs(total_absorption(m) - 1.0) < 1e-10);
  }
}

TEST_CASE("reach probabilities") {
  const WalkModel sym = validate_model(cfg_sym());
  CHECK(reach_probability(sym, 0, 0) == doctest::Approx(0.566987).epsilon(1e-6));
  CHECK(reach_probability(sym, 0, 2) ==
        doctest::Approx(reach_probability(sym, 0, -2)).epsilon(1e-13));
  // Translation by N leaves the lattice unchanged.
  CHECK(reach_probability(sym, 4, 5) ==
        doctest::Approx(reach_probability(sym, 0, 1)).epsilon(1e-13));

  ModelGenerator gen(24);
  for (int t = 0; t < 100; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    const std::int64_t i = gen.integer(-10, 10), j = gen.integer(-10, 10);
    const double f = reach_probability(m, i, j);
    REQUIRE(f >= -1e-14);
    REQUIRE(f <= 1.0 + 1e-12);
  }
}

TEST_CASE("reach probability matches the truncated solver for any start") {
  const WalkModel m = validate_model(cfg_drift());
  const std::int64_t K = oracle::default_truncation(m);
  for (auto [i, j] : {std::pair<std::int64_t, std::int64_t>{3, -1}, {-3, 4}, {5, 5}}) {
    const std::int64_t shift_i = floor_div(i, 2) * 2, shift_j = floor_div(j, 2) * 2;
    const double x_jj =
        oracle::truncated_visits(m.with_start(j - shift_j), K, 1.0).at(j - shift_j);
    const double x_ij =
        oracle::truncated_visits(m.with_start(i - shift_i), K, 1.0).at(j - shift_i);
    const double expected = i == j ? 1.0 - 1.0 / x_jj : x_ij / x_jj;
    CHECK(reach_probability(m, i, j) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("closed-form arrivals match the truncated solver") {
  ModelGenerator gen(25);
  for (int t = 0; t < 60; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    const std::int64_t K = oracle::default_truncation(m);
    const oracle::TruncatedVisits tv = oracle::truncated_visits(m, K, 1.0, 1e-12);
    for (std::int64_t j = -3 * m.N(); j <= 3 * m.N(); ++j) {
      const double x = site_visits(m, j);
      const double o = tv.at(j);
      REQUIRE(x >= 0.0);
      REQUIRE(std::abs(x - o) / std::max(o, 1e-30) < 1e-8);
    }
  }
}

TEST_CASE("difference-equation residuals") {
  ModelGenerator gen(26);
  for (int t = 0; t < 100; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    const std::int64_t N = m.N();
    for (std::int64_t k = -4; k <= 4; ++k)
      REQUIRE(std::abs(barrier_recurrence_residual(m, k)) < 1e-10);
    for (std::int64_t j = -3 * N; j <= 3 * N; ++j) {
      const std::int64_t n = j - floor_div(j, N) * N;
      if (n == 0 || n == 1 || n == N - 1 || j == m.i0())
        continue;
      REQUIRE(std::abs(interior_balance_residual(m, j)) < 1e-10);
    }
  }
}

TEST_CASE("geometric decay between barriers") {
  const WalkModel m = validate_model(cfg_drift());
  const BarrierCoefficients bc = barrier_coefficients(m);
  for (std::int64_t k = -5; k <= 0; ++k)
    CHECK(barrier_visits(m, k - 1) * bc.xi1 ==
          doctest::Approx(barrier_visits(m, k)).epsilon(1e-13));
  for (std::int64_t k = 1; k <= 5; ++k)
    CHECK(barrier_visits(m, k + 1) ==
          doctest::Approx(bc.xi2 * barrier_visits(m, k)).epsilon(1e-13));
}

TEST_CASE("total arrivals equal mean absorption time plus one") {
  ModelGenerator gen(27);
  for (int t = 0; t < 40; ++t) {
    const WalkModel m = validate_model(t % 2 ? gen.drift() : gen.balanced());
    const std::int64_t K = oracle::default_truncation(m) + 5;
    double total = 0.0;
    for (std::int64_t j = -K * m.N(); j <= K * m.N(); ++j)
      total += site_visits(m, j);
    const double m_start = mean_time_any(m, m.i0());
    REQUIRE(total == doctest::Approx(m_start + 1.0).epsilon(1e-8));
  }
  // 4 + 2 = 6 = 5 + 1 with x summed per barrier pair.
  const WalkModel sym = validate_model(cfg_sym());
  CHECK(mean_time_any(sym, 0) + 1.0 == doctest::Approx(6.0));
}

TEST_CASE("visit_profile") {
  const WalkModel m = validate_model(cfg_sym());
  const VisitProfile vp = visit_profile(m, -3, 3);
  CHECK(vp.values.size() == 13);
  CHECK(vp.at(0) == doctest::Approx(2.309401).epsilon(1e-6));
  CHECK(vp.at(100) == doctest::Approx(site_visits(m, 100)));
  CHECK(vp.barrier_coeff_left == doctest::Approx(vp.barrier_coeff_right));
  CHECK_THROWS(visit_profile(m, 2, 1));
}

TEST_CASE("floor_div") {
  CHECK(floor_div(5, 2) == 2);
  CHECK(floor_div(-5, 2) == -3);
  CHECK(floor_div(-4, 2) == -2);
  CHECK(floor_div(0, 3) == 0);
}
