#include "mfbwalk/visit_engine.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mfbwalk {

namespace {

constexpr double kDiscrepancyTolerance = 1e-9;

bool relatively_close(double a, double b, double tol) {
  if (!std::isfinite(a) || !std::isfinite(b))
    return false;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= tol * std::max(scale, 1e-300);
}

void record(Diagnostics *diag, DiagnosticKind kind, const char *source,
            const std::string &what, double authoritative,
            double alternative) {
  if (!diag)
    return;
  std::ostringstream os;
  os.precision(17);
  os << what << ": authoritative " << authoritative << ", alternative "
     << alternative;
  diag->push_back({kind, source, os.str(), authoritative, alternative});
}

// Interior site value between barriers kN and (k+1)N, n in (0, N).
double interval_visits(const WalkModel &m, std::int64_t k, std::int64_t n,
                       double x_left, double x_right, bool lower_branch) {
  const double p = m.p(), q = m.q();
  const double p0 = m.p0(), q0 = m.q0();
  const double Nd = static_cast<double>(m.N());
  const double nd = static_cast<double>(n);
  const double i0 = static_cast<double>(m.i0());

  if (m.balanced()) {
    double v = q0 * nd * x_right + p0 * (Nd - nd) * x_left;
    if (k == 0)
      v += lower_branch ? nd * (Nd - i0) : i0 * (Nd - nd);
    return v / (p * Nd);
  }

  const double rho = m.rho();
  const double rn = rho_pow_m1(rho, nd);  // rho^n - 1
  const double rN = rho_pow_m1(rho, Nd);  // rho^N - 1
  double braces = (p0 / p) * (rn - rN) * x_left + (q0 / q) * (-rn) * x_right;
  if (k == 0) {
    if (lower_branch)
      braces += (-rn) * rho_pow_m1(rho, Nd - i0) / (p - q);
    else
      braces += (rn - rN) * (-rho_pow_m1(rho, -i0)) / (p - q);
  }
  return braces / (-rN);
}

} // namespace

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t d = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --d;
  return d;
}

BarrierCoefficients barrier_coefficients(const WalkModel &model) {
  const BarrierSpectrum bs = barrier_spectrum(model);
  const double p = model.p(), q = model.q();
  const double p0 = model.p0(), q0 = model.q0();
  const double Nd = static_cast<double>(model.N());
  const double i0 = static_cast<double>(model.i0());

  // Right-hand sides of  -C1 xi1 + K2 xi2 = A  and  C1 - K2 = B.
  double A = 0.0, B = 0.0;
  if (model.balanced()) {
    A = (i0 - Nd) / q0;
    B = -i0 / p0;
  } else {
    const double rho = model.rho();
    const double zeta = 1.0 / std::abs(p - q);
    A = -(q * zeta / q0) * lambda_pow_diff(rho, Nd - i0);
    B = (p * zeta / p0) * lambda_pow_diff(rho, -i0);
  }
  BarrierCoefficients bc;
  bc.xi1 = bs.xi1;
  bc.xi2 = bs.xi2;
  bc.K2 = -(A + B * bs.xi1) / (bs.xi1 - bs.xi2);
  bc.C1 = bc.K2 + B;
  return bc;
}

double printed_barrier_visits(const WalkModel &model, std::int64_t k) {
  const BarrierSpectrum bs = barrier_spectrum(model);
  const double p0 = model.p0(), q0 = model.q0();
  const double Nd = static_cast<double>(model.N());
  const double i0 = static_cast<double>(model.i0());
  const double kd = static_cast<double>(k);

  if (model.balanced()) {
    const double root = std::sqrt(*bs.psi0 * *bs.psi0 - 4.0 * p0 * q0);
    if (k <= 0)
      return (i0 * q0 * bs.xi2 / p0 + Nd - i0) * std::pow(bs.xi1, kd) / root;
    return (i0 * q0 * bs.xi1 / p0 + Nd - i0) * std::pow(bs.xi2, kd) / root;
  }
  const double rho = model.rho();
  const double l1 = std::max(1.0, rho), l2 = std::min(1.0, rho);
  const double xi = k <= 0 ? bs.xi1 : bs.xi2;
  const double bracket =
      (std::pow(l1, Nd - i0) - std::pow(l2, Nd - i0)) * xi +
      std::pow(rho, Nd) * (std::pow(l2, -i0) - std::pow(l1, -i0));
  return bracket * *bs.Omega * std::pow(xi, kd - 1.0);
}

double barrier_visits(const WalkModel &model, std::int64_t k,
                      Diagnostics *diag) {
  const BarrierCoefficients bc = barrier_coefficients(model);
  const double kd = static_cast<double>(k);
  const double x =
      k <= 0 ? bc.C1 * std::pow(bc.xi1, kd) : bc.K2 * std::pow(bc.xi2, kd);
  if (diag) {
    const double printed = printed_barrier_visits(model, k);
    if (!relatively_close(x, printed, kDiscrepancyTolerance))
      record(diag, DiagnosticKind::FormulaDiscrepancy, "barrier_visits",
             "printed x_{kN} at k=" + std::to_string(k) +
                 " differs from the boundary-system solution",
             x, printed);
  }
  return x;
}

double site_visits(const WalkModel &model, std::int64_t j, Diagnostics *diag) {
  const std::int64_t N = model.N();
  const std::int64_t k = floor_div(j, N);
  const std::int64_t n = j - k * N;
  if (n == 0)
    return barrier_visits(model, k, diag);

  const double x_left = barrier_visits(model, k, diag);
  const double x_right = barrier_visits(model, k + 1, diag);
  const std::int64_t i0 = model.i0();
  const bool lower = k == 0 && n < i0;
  const double x = interval_visits(model, k, n, x_left, x_right, lower);

  if (diag) {
    if (k == 0 && n == i0) {
      const double other = interval_visits(model, k, n, x_left, x_right, true);
      if (!relatively_close(x, other, kDiscrepancyTolerance))
        record(diag, DiagnosticKind::ConsistencyFailure, "site_visits",
               "start-interval branches disagree at n = i0", x, other);
    }
    const double printed = printed_site_visits(model, j);
    if (!relatively_close(x, printed, kDiscrepancyTolerance))
      record(diag, DiagnosticKind::FormulaDiscrepancy, "site_visits",
             "printed x_j at j=" + std::to_string(j) +
                 " differs from the interval solution",
             x, printed);
  }
  return x;
}

double printed_site_visits(const WalkModel &model, std::int64_t j) {
  const std::int64_t N = model.N();
  const std::int64_t k = floor_div(j, N);
  const std::int64_t n = j - k * N;
  if (n == 0)
    return printed_barrier_visits(model, k);

  const double xa = printed_barrier_visits(model, k);
  const double xb = printed_barrier_visits(model, k + 1);
  if (model.balanced() || k == 0)
    return interval_visits(model, k, n, xa, xb, k == 0 && n < model.i0());

  const double rho = model.rho();
  const double Nd = static_cast<double>(N);
  const double e = static_cast<double>(n - k * N);
  const double braces =
      (model.p0() / model.p()) * (std::pow(rho, e) - std::pow(rho, Nd)) * xa +
      (model.q0() / model.q()) * (1.0 - std::pow(rho, e)) * xb;
  return braces / (1.0 - std::pow(rho, Nd));
}

double absorption_mass(const WalkModel &model, std::int64_t k) {
  return model.s0() * barrier_visits(model, k);
}

double total_absorption(const WalkModel &model) {
  const BarrierCoefficients bc = barrier_coefficients(model);
  const double left = bc.C1 * bc.xi1 / (bc.xi1 - 1.0);  // k <= 0
  const double right = bc.K2 * bc.xi2 / (1.0 - bc.xi2); // k >= 1
  return model.s0() * (left + right);
}

double reach_probability(const WalkModel &model, std::int64_t i,
                         std::int64_t j) {
  const std::int64_t N = model.N();
  auto visits_from = [&](std::int64_t from, std::int64_t to) {
    const std::int64_t shift = floor_div(from, N) * N;
    return site_visits(model.with_start(from - shift), to - shift);
  };
  const double x_jj = visits_from(j, j);
  if (i == j)
    return 1.0 - 1.0 / x_jj;
  return visits_from(i, j) / x_jj;
}

double barrier_recurrence_residual(const WalkModel &model, std::int64_t k) {
  const BarrierSpectrum bs = barrier_spectrum(model);
  const double x_next = barrier_visits(model, k + 1);
  const double x_here = barrier_visits(model, k);
  const double x_prev = barrier_visits(model, k - 1);
  const double lhs =
      bs.quad_a * x_next + bs.quad_b * x_here + bs.quad_c * x_prev;

  const double Nd = static_cast<double>(model.N());
  const double i0 = static_cast<double>(model.i0());
  double rhs = 0.0;
  if (model.balanced()) {
    if (k == 0)
      rhs = i0 - Nd;
    else if (k == 1)
      rhs = -i0;
  } else {
    const double rho = model.rho();
    const double inv_gap = model.q() / std::abs(model.p() - model.q());
    if (k == 0)
      rhs = -inv_gap * lambda_pow_diff(rho, Nd - i0);
    else if (k == 1)
      rhs = inv_gap * std::pow(rho, Nd) * lambda_pow_diff(rho, -i0);
  }
  return lhs - rhs;
}

double interior_balance_residual(const WalkModel &model, std::int64_t j) {
  return (1.0 - model.r()) * site_visits(model, j) -
         model.p() * site_visits(model, j - 1) -
         model.q() * site_visits(model, j + 1);
}

double VisitProfile::at(std::int64_t j) const {
  if (auto it = values.find(j); it != values.end())
    return it->second;
  return site_visits(model, j);
}

VisitProfile visit_profile(const WalkModel &model, std::int64_t k_min,
                           std::int64_t k_max) {
  if (k_min > k_max)
    throw std::invalid_argument("visit_profile: empty window");
  const BarrierCoefficients bc = barrier_coefficients(model);
  VisitProfile vp{model, bc.C1, bc.K2, k_min, k_max, {}};
  for (std::int64_t j = k_min * model.N(); j <= k_max * model.N(); ++j)
    vp.values.emplace(j, site_visits(model, j));
  return vp;
}

} // namespace mfbwalk
