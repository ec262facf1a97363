#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfbwalk/errors.hpp"
#include "mfbwalk/walk_model.hpp"
#include "support/model_gen.hpp"

#include <cmath>

using namespace mfbwalk;
using mfbwalk::testing::cfg_drift;
using mfbwalk::testing::cfg_sym;
using mfbwalk::testing::ModelGenerator;

namespace {

double lambda_residual(const WalkModel &m, double z, double l) {
  const double a = m.q() * z * l * l, b = (1.0 - m.r() * z) * l, c = m.p() * z;
  return std::abs(a - b + c) / (std::abs(a) + std::abs(b) + std::abs(c));
}

double quad_residual(const BarrierSpectrum &bs, double x) {
  const double a = bs.quad_a * x * x, b = bs.quad_b * x, c = bs.quad_c;
  return std::abs(a + b + c) / (std::abs(a) + std::abs(b) + std::abs(c));
}

} // namespace

TEST_CASE("validate_model accepts the reference configurations") {
  const WalkModel sym = validate_model(cfg_sym());
  CHECK(sym.branch() == Branch::Balanced);
  CHECK(sym.rho() == 1.0);

  const WalkModel drift = validate_model(cfg_drift());
  CHECK(drift.branch() == Branch::Drift);
  CHECK(drift.rho() == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("validate_model rejects invalid parameters") {
  RawParameters m{0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 2, 0};
  try {
    validate_model(m);
    FAIL("expected RejectedParameter");
  } catch (const RejectedParameter &e) {
    CHECK(e.field() == "s0");
  }

  auto rejects = [](RawParameters raw, const char *field) {
    try {
      validate_model(raw);
    } catch (const RejectedParameter &e) {
      return e.field() == field;
    }
    return false;
  };
  RawParameters bad = cfg_drift();
  bad.p = 0.0;
  bad.r = 0.8;
  CHECK(rejects(bad, "p"));
  bad = cfg_drift();
  bad.q = -0.1;
  CHECK(rejects(bad, "q"));
  bad = cfg_drift();
  bad.r = 0.5; // p + q + r = 1.1
  CHECK(rejects(bad, "r"));
  bad = cfg_drift();
  bad.r0 = 0.3;
  CHECK(rejects(bad, "r0"));
  bad = cfg_drift();
  bad.q0 = 0.0;
  bad.r0 = 0.6;
  CHECK(rejects(bad, "q0"));
  bad = cfg_drift();
  bad.N = 1;
  CHECK(rejects(bad, "N"));
  bad = cfg_drift();
  bad.i0 = 2;
  CHECK(rejects(bad, "i0"));
  bad = cfg_drift();
  bad.i0 = -1;
  CHECK(rejects(bad, "i0"));
  bad = cfg_drift();
  bad.p = std::nan("");
  CHECK(rejects(bad, "p"));
}

TEST_CASE("validate_model renormalises within tolerance") {
  RawParameters m = cfg_drift();
  m.r = 0.4 + 5e-13;
  m.r0 = 0.4 - 5e-13;
  const WalkModel w = validate_model(m);
  CHECK(w.p() + w.q() + w.r() == doctest::Approx(1.0).epsilon(1e-16));
  CHECK(w.p0() + w.q0() + w.r0() + w.s0() == doctest::Approx(1.0).epsilon(1e-16));

  RawParameters edge{0.5, 0.5, -1e-13, 0.25, 0.25, 0.25, 0.25, 2, 1};
  CHECK(validate_model(edge).r() == 0.0);
}

TEST_CASE("near-balanced models are tagged balanced") {
  RawParameters m = cfg_sym();
  m.p = 0.5 + 4e-10;
  m.q = 0.5 - 4e-10;
  CHECK(validate_model(m).balanced());
  m.p = 0.5 + 1e-6;
  m.q = 0.5 - 1e-6;
  CHECK_FALSE(validate_model(m).balanced());
}

TEST_CASE("with_start re-anchors and validates") {
  const WalkModel m = validate_model(cfg_drift());
  CHECK(m.with_start(1).i0() == 1);
  CHECK_THROWS_AS(m.with_start(2), RejectedParameter);
}

TEST_CASE("solve_quadratic") {
  auto [a, b] = solve_quadratic(1.0, -3.0, 2.0);
  CHECK(a == 2.0);
  CHECK(b == 1.0);
  // Large spread: the small root must not lose digits.
  std::tie(a, b) = solve_quadratic(1.0, -1e8, 1.0);
  CHECK(b == doctest::Approx(1e-8).epsilon(1e-14));
  std::tie(a, b) = solve_quadratic(1.0, -2.0, 1.0);
  CHECK(a == 1.0);
  CHECK(b == 1.0);
  CHECK_THROWS(solve_quadratic(1.0, 0.0, 1.0));
  CHECK_THROWS(solve_quadratic(0.0, 1.0, 1.0));
}

TEST_CASE("lambda_pair examples") {
  const WalkModel sym = validate_model(cfg_sym());
  const SpectralPair s1 = lambda_pair(sym, 1.0);
  CHECK(s1.lambda1() == 1.0);
  CHECK(s1.lambda2() == 1.0);
  CHECK(s1.degenerate());
  CHECK_THROWS_AS(s1.zeta(), DegenerateSpectrum);

  const WalkModel drift = validate_model(cfg_drift());
  const SpectralPair d1 = lambda_pair(drift, 1.0);
  CHECK(d1.lambda1() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(d1.lambda2() == 1.0);
  CHECK(d1.zeta() == doctest::Approx(5.0).epsilon(1e-14));

  // 0.25 L^2 - L + 0.25 = 0
  const SpectralPair h = lambda_pair(sym, 0.5);
  CHECK(h.lambda1() == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-15));
  CHECK(h.lambda2() == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
  CHECK(lambda_residual(sym, 0.5, h.lambda1()) < 1e-12);
  CHECK(lambda_residual(sym, 0.5, h.lambda2()) < 1e-12);
  CHECK(h.zeta() == doctest::Approx(1.0 / std::sqrt(0.75)).epsilon(1e-14));

  CHECK_THROWS_AS(lambda_pair(sym, 0.0), RejectedParameter);
  CHECK_THROWS_AS(lambda_pair(sym, 1.5), RejectedParameter);
}

TEST_CASE("lambda roots: residuals, product and ordering on random models") {
  ModelGenerator gen(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const WalkModel m =
        validate_model(trial % 2 ? gen.drift() : gen.balanced());
    for (double z = 0.05; z <= 1.0 + 1e-12; z += 0.05) {
      const double zz = std::min(z, 1.0);
      const SpectralPair lp = lambda_pair(m, zz);
      REQUIRE(lambda_residual(m, zz, lp.lambda1()) < 1e-10);
      REQUIRE(lambda_residual(m, zz, lp.lambda2()) < 1e-10);
      REQUIRE(std::abs(lp.lambda1() * lp.lambda2() / m.rho() - 1.0) < 1e-10);
      if (zz < 1.0) {
        REQUIRE(lp.lambda1() > 1.0);
        REQUIRE(lp.lambda2() > 0.0);
        REQUIRE(lp.lambda2() < 1.0);
      }
    }
  }
}

TEST_CASE("barrier_spectrum examples") {
  const BarrierSpectrum sym = barrier_spectrum(validate_model(cfg_sym()));
  REQUIRE(sym.psi0.has_value());
  CHECK(*sym.psi0 == -1.0);
  CHECK_FALSE(sym.omega0.has_value());
  CHECK(sym.quad_a == 0.25);
  CHECK(sym.quad_c == 0.25);
  CHECK(sym.xi1 == doctest::Approx(2.0 + std::sqrt(3.0)).epsilon(1e-15));
  CHECK(sym.xi2 == doctest::Approx(2.0 - std::sqrt(3.0)).epsilon(1e-14));
  CHECK(quad_residual(sym, sym.xi1) < 1e-12);
  CHECK(quad_residual(sym, sym.xi2) < 1e-12);

  const BarrierSpectrum drift = barrier_spectrum(validate_model(cfg_drift()));
  REQUIRE(drift.omega0.has_value());
  // (1 - 4)(0.6) + (2 - 1)(0.4 + 0.2)
  CHECK(*drift.omega0 == doctest::Approx(-1.2).epsilon(1e-14));
  CHECK(drift.xi1 * drift.xi2 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(drift.alpha == doctest::Approx(0.56).epsilon(1e-14));
  CHECK(quad_residual(drift, drift.xi1) < 1e-12);
  CHECK(quad_residual(drift, drift.xi2) < 1e-12);
}

TEST_CASE("xi roots are of saddle type on random models") {
  ModelGenerator gen(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const WalkModel m =
        validate_model(trial % 2 ? gen.drift(12) : gen.balanced(12));
    const BarrierSpectrum bs = barrier_spectrum(m);
    REQUIRE(quad_residual(bs, bs.xi1) < 1e-10);
    REQUIRE(quad_residual(bs, bs.xi2) < 1e-10);
    REQUIRE(bs.xi1 > 1.0);
    REQUIRE(bs.xi2 < 1.0);
    REQUIRE(bs.xi2 > 0.0);
    const double product = m.balanced()
                               ? m.p0() / m.q0()
                               : m.p0() * std::pow(m.rho(), m.N() - 1.0) / m.q0();
    REQUIRE(bs.xi1 * bs.xi2 == doctest::Approx(product).epsilon(1e-10));
  }
}

TEST_CASE("xi roots are continuous across the balance point") {
  ModelGenerator gen(13);
  for (int trial = 0; trial < 50; ++trial) {
    const RawParameters base = gen.balanced();
    const BarrierSpectrum b = barrier_spectrum(validate_model(base));
    for (double sign : {-1.0, 1.0}) {
      // rho = 1 + sign * 1e-6 with p + q held fixed.
      RawParameters pert = base;
      const double move = base.p + base.q;
      const double rho = 1.0 + sign * 1e-6;
      pert.q = move / (1.0 + rho);
      pert.p = move - pert.q;
      const WalkModel pm = validate_model(pert);
      REQUIRE_FALSE(pm.balanced());
      const BarrierSpectrum d = barrier_spectrum(pm);
      // Relative: the first-order shift grows with xi1 itself.
      CHECK(std::abs(d.xi1 / b.xi1 - 1.0) < 1e-4);
      CHECK(std::abs(d.xi2 / b.xi2 - 1.0) < 1e-4);
    }
  }
}

TEST_CASE("omega0_at agrees with its z = 1 special case") {
  const WalkModel m = validate_model(cfg_drift());
  CHECK(omega0_at(m, 1.0 - 1e-9) == doctest::Approx(omega0_at(m, 1.0)).epsilon(1e-6));
  CHECK(omega0_at(validate_model(cfg_sym()), 1.0) == 0.0);
}
