#include "mfbwalk/walk_model.hpp"

#include "mfbwalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfbwalk {

const char *to_string(Branch branch) noexcept {
  return branch == Branch::Balanced ? "BALANCED" : "DRIFT";
}

const char *to_string(DiagnosticKind kind) noexcept {
  switch (kind) {
  case DiagnosticKind::FormulaDiscrepancy:
    return "FormulaDiscrepancy";
  case DiagnosticKind::ConsistencyFailure:
    return "ConsistencyFailure";
  case DiagnosticKind::ExcessCensoring:
    return "ExcessCensoring";
  case DiagnosticKind::NumericExtension:
    return "NumericExtension";
  }
  return "Unknown";
}

namespace {

void require_finite(const char *field, double v) {
  if (!std::isfinite(v))
    throw RejectedParameter(field, v, "must be finite");
}

void require_positive(const char *field, double v) {
  require_finite(field, v);
  if (!(v > 0.0))
    throw RejectedParameter(field, v, "must be > 0");
}

} // namespace

WalkModel validate_model(const RawParameters &raw) {
  RawParameters m = raw;

  require_positive("p", m.p);
  require_positive("q", m.q);
  require_finite("r", m.r);
  if (m.p + m.q > 1.0 + kProbabilityTolerance)
    throw RejectedParameter("p", m.p, "p + q must be <= 1");
  if (m.r < -kProbabilityTolerance)
    throw RejectedParameter("r", m.r, "must be >= 0");
  if (std::abs(m.p + m.q + m.r - 1.0) > kProbabilityTolerance)
    throw RejectedParameter("r", m.r, "p + q + r must equal 1");
  m.r = std::max(0.0, 1.0 - m.p - m.q);

  require_positive("p0", m.p0);
  require_positive("q0", m.q0);
  require_positive("s0", m.s0);
  require_finite("r0", m.r0);
  if (m.r0 < -kProbabilityTolerance)
    throw RejectedParameter("r0", m.r0, "must be >= 0");
  if (std::abs(m.p0 + m.q0 + m.r0 + m.s0 - 1.0) > kProbabilityTolerance)
    throw RejectedParameter("r0", m.r0, "p0 + q0 + r0 + s0 must equal 1");
  m.r0 = std::max(0.0, 1.0 - m.p0 - m.q0 - m.s0);

  if (m.N < 2)
    throw RejectedParameter("N", static_cast<double>(m.N), "must be >= 2");
  if (m.i0 < 0 || m.i0 >= m.N)
    throw RejectedParameter("i0", static_cast<double>(m.i0),
                            "must satisfy 0 <= i0 < N");

  const Branch branch = std::abs(m.p - m.q) < kBalanceThreshold
                            ? Branch::Balanced
                            : Branch::Drift;
  return WalkModel(m, branch);
}

WalkModel WalkModel::with_start(std::int64_t start) const {
  RawParameters moved = raw_;
  moved.i0 = start;
  return validate_model(moved);
}

std::pair<double, double> solve_quadratic(double a, double b, double c) {
  if (a == 0.0)
    throw std::domain_error("solve_quadratic: leading coefficient is zero");
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    // Rounding can push a double root slightly negative.
    if (disc < -1e-14 * (b * b + std::abs(4.0 * a * c)))
      throw std::domain_error("solve_quadratic: complex roots");
    disc = 0.0;
  }
  const double s = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (s == 0.0)
    return {0.0, 0.0};
  const double x1 = s / a;
  const double x2 = c / s;
  return x1 >= x2 ? std::pair{x1, x2} : std::pair{x2, x1};
}

double SpectralPair::zeta() const {
  if (!zeta_)
    throw DegenerateSpectrum(
        "zeta is undefined at z = 1 for a balanced walk; use the balanced "
        "(polynomial) formulas");
  return *zeta_;
}

double rho_pow_m1(double rho, double m) {
  return std::expm1(m * std::log(rho));
}

double lambda_pow_diff(double rho, double m) {
  // {lambda1, lambda2} = {rho, 1} when rho > 1, {1, rho} otherwise.
  const double d = rho_pow_m1(rho, m);
  return rho > 1.0 ? d : -d;
}

SpectralPair lambda_pair(const WalkModel &model, double z) {
  if (!(z > 0.0 && z <= 1.0))
    throw RejectedParameter("z", z, "must lie in (0, 1]");
  const double p = model.p(), q = model.q(), r = model.r();
  const double rho = model.rho();

  if (z == 1.0) {
    if (model.balanced())
      return SpectralPair(z, 1.0, 1.0, std::nullopt);
    return SpectralPair(z, std::max(1.0, rho), std::min(1.0, rho),
                        1.0 / std::abs(p - q));
  }

  // (1 - rz)^2 - 4pqz^2 factored so that neither factor cancels near z = 1.
  const double root_pq = std::sqrt(p * q);
  const double gap = std::sqrt(p) - std::sqrt(q);
  const double disc =
      ((1.0 - z) + z * gap * gap) * (1.0 - r * z + 2.0 * root_pq * z);
  const double sq = std::sqrt(disc);
  const double lambda1 = ((1.0 - r * z) + sq) / (2.0 * q * z);
  const double lambda2 = rho / lambda1;
  return SpectralPair(z, lambda1, lambda2, 1.0 / sq);
}

double omega0_at(const WalkModel &model, double z) {
  const double N = static_cast<double>(model.N());
  const double rho = model.rho();
  const double flux = rho * model.q0() + model.p0();
  if (z == 1.0) {
    if (model.balanced())
      return 0.0;
    return -lambda_pow_diff(rho, N) * (1.0 - model.r0()) +
           lambda_pow_diff(rho, N - 1.0) * flux;
  }
  const SpectralPair lp = lambda_pair(model, z);
  const double l1 = lp.lambda1(), l2 = lp.lambda2();
  return (std::pow(l2, N) - std::pow(l1, N)) * (1.0 - model.r0() * z) +
         z * (std::pow(l1, N - 1.0) - std::pow(l2, N - 1.0)) * flux;
}

BarrierSpectrum barrier_spectrum(const WalkModel &model) {
  BarrierSpectrum bs;
  bs.branch = model.branch();
  const double p = model.p(), q = model.q(), r = model.r();
  const double p0 = model.p0(), q0 = model.q0(), s0 = model.s0();
  const double N = static_cast<double>(model.N());
  bs.alpha = r * (1.0 - r) + 4.0 * p * q;

  if (model.balanced()) {
    const double psi0 = -(p0 + q0 + N * s0);
    bs.psi0 = psi0;
    bs.quad_a = q0;
    bs.quad_b = psi0;
    bs.quad_c = p0;
  } else {
    const double rho = model.rho();
    const double omega0 = omega0_at(model, 1.0);
    const double rho_nm1 = std::pow(rho, N - 1.0);
    bs.omega0 = omega0;
    bs.quad_a = q0;
    bs.quad_b = omega0 * q / std::abs(p - q); // omega0 / |1 - rho|
    bs.quad_c = p0 * rho_nm1;
    const double one_minus_rho = (q - p) / q;
    bs.Omega = 1.0 / std::sqrt(omega0 * omega0 - 4.0 * p0 * q0 *
                                                     one_minus_rho *
                                                     one_minus_rho * rho_nm1);
  }
  std::tie(bs.xi1, bs.xi2) = solve_quadratic(bs.quad_a, bs.quad_b, bs.quad_c);
  return bs;
}

} // namespace mfbwalk
