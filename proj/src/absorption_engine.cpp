#include "mfbwalk/absorption_engine.hpp"

#include "mfbwalk/linalg.hpp"
#include "mfbwalk/visit_engine.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mfbwalk {

namespace {

constexpr double kDiscrepancyTolerance = 1e-9;

std::int64_t reduce(std::int64_t i, std::int64_t N) {
  return i - floor_div(i, N) * N;
}

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

void require_drift(const WalkModel &model) {
  if (model.balanced())
    throw BalancedUnsupported(
        "no closed form for the per-barrier mean time when p == q");
}

double power_sum(double rho, double m) { return 1.0 + std::pow(rho, m); }

} // namespace

double mean_time_formula(const WalkModel &model, std::int64_t i,
                         Branch branch) {
  const double p = model.p(), q = model.q();
  const double p0 = model.p0(), q0 = model.q0(), s0 = model.s0();
  const double N = static_cast<double>(model.N());
  const double id = static_cast<double>(reduce(i, model.N()));
  const double tail = (1.0 - s0) / s0;

  if (branch == Branch::Balanced)
    return N * id / (2.0 * p) - id * id / (2.0 * p) +
           (p0 + q0) * (N - 1.0) / (2.0 * p * s0) + tail;

  if (p == q)
    throw std::domain_error("mean_time_formula: drift branch needs p != q");
  // Terms grouped pairwise so that each group is O(1/(q - p)) rather than
  // O(1/(q - p)^2); algebraically identical to the printed sum.
  const double rho = model.rho();
  const auto u_m1 = [rho](double m) { return rho_pow_m1(rho, -m); }; // rho^-m - 1
  const double one_minus_uN = -u_m1(N);
  const double position = (N * u_m1(id) / one_minus_uN + id) / (q - p);
  const double barrier =
      (N * (p0 * u_m1(1.0) + q0 * u_m1(N - 1.0)) / one_minus_uN + p0 +
       q0 * (N - 1.0)) /
      ((q - p) * s0);
  return position + barrier + tail;
}

double printed_mean_time(const WalkModel &model, std::int64_t i) {
  const double p = model.p(), q = model.q();
  const double p0 = model.p0(), q0 = model.q0(), r0 = model.r0(),
               s0 = model.s0();
  const double N = static_cast<double>(model.N());
  const double id = static_cast<double>(reduce(i, model.N()));
  const double rho = model.rho();
  const double d = (q - p) * (1.0 - std::pow(rho, -N));
  return N * std::pow(rho, -id) / d + id / (q - p) +
         (p0 + q0 * (N - 1.0)) / ((q - p) * s0) + (1.0 - s0) / s0 +
         N * (p0 / rho + q0 * std::pow(rho, 1.0 - N) + r0 - 1.0) / (d * s0);
}

std::vector<double> periodic_mean_times(const WalkModel &model) {
  const auto n = static_cast<std::size_t>(model.N());
  std::vector<double> a(n * n, 0.0), b(n, 1.0);
  a[0] = 1.0 - model.r0();
  a[1] -= model.p0();
  a[n - 1] -= model.q0();
  b[0] = 1.0 - model.s0();
  for (std::size_t i = 1; i < n; ++i) {
    a[i * n + i] += 1.0 - model.r();
    a[i * n + (i + 1) % n] -= model.p();
    a[i * n + i - 1] -= model.q();
  }
  std::vector<double> m = linalg::solve_dense(std::move(a), std::move(b), n);
  m.push_back(m.front());
  return m;
}

double mean_time_any(const WalkModel &model, std::int64_t i,
                     Diagnostics *diag) {
  const double formula = mean_time_formula(model, i, model.branch());
  const std::vector<double> periodic = periodic_mean_times(model);
  const double solved = periodic[static_cast<std::size_t>(reduce(i, model.N()))];
  if (relatively_close(formula, solved, kDiscrepancyTolerance))
    return formula;
  record(diag, DiagnosticKind::FormulaDiscrepancy, "mean_time_any",
         "closed-form m_" + std::to_string(i) +
             " differs from the periodic solve; using the solve",
         solved, formula);
  return solved;
}

DerivativeBundle spectral_derivatives(const WalkModel &model) {
  require_drift(model);
  const BarrierSpectrum bs = barrier_spectrum(model);
  const double p = model.p(), q = model.q();
  const double p0 = model.p0(), q0 = model.q0(), r0 = model.r0();
  const double N = static_cast<double>(model.N());
  const double rho = model.rho();
  const double l1 = std::max(1.0, rho), l2 = std::min(1.0, rho);
  const double zeta = 1.0 / std::abs(p - q);
  const double flux = rho * q0 + p0;
  const double omega0 = *bs.omega0;
  const double Omega = *bs.Omega;

  DerivativeBundle d;
  d.alpha = bs.alpha;
  d.dlambda1 = -zeta * l1;
  d.dlambda2 = zeta * l2;
  d.dzeta = zeta * zeta * zeta * d.alpha;

  const double base = r0 * lambda_pow_diff(rho, N) +
                      flux * lambda_pow_diff(rho, N - 1.0);
  d.domega0 = base + zeta * (N * (1.0 - r0) * power_sum(rho, N) -
                             (N - 1.0) * flux * power_sum(rho, N - 1.0));
  d.domega0_printed =
      base + zeta * (N * power_sum(rho, N) - power_sum(rho, N - 1.0));

  const double growth = Omega * (d.alpha * omega0 * zeta * zeta + d.domega0);
  d.dxi1 = -bs.xi1 * growth;
  d.dxi2 = bs.xi2 * growth;
  d.dOmega = -Omega * Omega * Omega *
             (omega0 * d.domega0 +
              4.0 * p0 * q0 / (p * q) * std::pow(rho, N) * d.alpha);
  return d;
}

namespace {

double proof_chain(const WalkModel &model, const BarrierSpectrum &bs,
                   const DerivativeBundle &d, std::int64_t k, bool left) {
  const double N = static_cast<double>(model.N());
  const double rho = model.rho();
  const double zeta = 1.0 / std::abs(model.p() - model.q());
  const double L = lambda_pow_diff(rho, N);
  const double dL = -N * zeta * power_sum(rho, N);
  const double xi = left ? bs.xi1 : bs.xi2;
  const double dxi = left ? d.dxi1 : d.dxi2;
  const double kd = static_cast<double>(k);
  const double Omega = *bs.Omega;
  return model.s0() * std::pow(xi, kd) *
         (d.dOmega * L + Omega * dL + Omega * L * kd * dxi / xi);
}

double printed_display(const WalkModel &model, const BarrierSpectrum &bs,
                       const DerivativeBundle &d, std::int64_t k) {
  const double p = model.p(), q = model.q();
  const double p0 = model.p0(), q0 = model.q0();
  const double N = static_cast<double>(model.N());
  const double rho = model.rho();
  const double zeta = 1.0 / std::abs(p - q);
  const double omega0 = *bs.omega0;
  const double l1 = std::max(1.0, rho), l2 = std::min(1.0, rho);
  const double Omega = std::sqrt(omega0 * omega0 - 4.0 * p0 * q0 *
                                                       (rho - 1.0) *
                                                       (rho - 1.0) *
                                                       std::pow(rho, N - 1.0));
  const double dw = d.domega0_printed;
  const double xi = k <= 0 ? bs.xi1 : bs.xi2;
  const double absk = static_cast<double>(k < 0 ? -k : k);
  const double inner =
      absk * (dw + d.alpha * omega0 * zeta * zeta) -
      Omega * (omega0 * dw + 4.0 * p0 * q0 / (p * q) * std::pow(rho, N) *
                                 d.alpha);
  return model.s0() * Omega * std::pow(xi, static_cast<double>(k)) *
         (-N * (1.0 + std::pow(rho, N)) * zeta +
          (std::pow(l1, N) - std::pow(l2, N)) * Omega * inner);
}

void require_barrier_start(const WalkModel &model) {
  if (model.i0() != 0)
    throw StartNotBarrier("per-barrier mean time requires i0 = 0, got i0 = " +
                          std::to_string(model.i0()));
}

} // namespace

double mean_time_to_barrier_via(const WalkModel &model, std::int64_t k,
                                BarrierTimePath path) {
  require_drift(model);
  require_barrier_start(model);
  const BarrierSpectrum bs = barrier_spectrum(model);
  const DerivativeBundle d = spectral_derivatives(model);
  if (path == BarrierTimePath::PrintedDisplay)
    return printed_display(model, bs, d, k);
  return proof_chain(model, bs, d, k, k <= 0);
}

double mean_time_to_barrier(const WalkModel &model, std::int64_t k,
                            Diagnostics *diag) {
  require_drift(model);
  require_barrier_start(model);
  const BarrierSpectrum bs = barrier_spectrum(model);
  const DerivativeBundle d = spectral_derivatives(model);
  const double value = proof_chain(model, bs, d, k, k <= 0);

  if (k == 0) {
    // Both root branches are valid at k = 0.
    const double right = proof_chain(model, bs, d, k, false);
    if (!relatively_close(value, right, kDiscrepancyTolerance))
      record(diag, DiagnosticKind::ConsistencyFailure, "mean_time_to_barrier",
             "xi1 and xi2 branches disagree at k = 0", value, right);
  }
  if (diag) {
    const double printed = printed_display(model, bs, d, k);
    if (!relatively_close(value, printed, kDiscrepancyTolerance))
      record(diag, DiagnosticKind::FormulaDiscrepancy, "mean_time_to_barrier",
             "printed m_{0k} display at k=" + std::to_string(k) +
                 " differs from the proof chain rule",
             value, printed);
  }
  return value;
}

AbsorptionTimes absorption_times(const WalkModel &model, std::int64_t k_min,
                                 std::int64_t k_max, Diagnostics *diag) {
  AbsorptionTimes at{model, {}, {}};
  at.period_values.reserve(static_cast<std::size_t>(model.N()) + 1);
  for (std::int64_t i = 0; i <= model.N(); ++i)
    at.period_values.push_back(mean_time_any(model, i, diag));
  if (!model.balanced() && model.i0() == 0)
    for (std::int64_t k = k_min; k <= k_max; ++k)
      at.per_barrier.emplace(k, mean_time_to_barrier(model, k, diag));
  return at;
}

} // namespace mfbwalk
