#pragma once

// Mean absorption times. m_i counts the steps taken before the absorbing
// transition (the absorbing step itself is not counted), so that
// sum_j x_j = m_{i0} + 1.

#include "mfbwalk/errors.hpp"
#include "mfbwalk/walk_model.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace mfbwalk {

/// Closed-form m_i (i reduced mod N) for the requested branch. The drift
/// expression is regrouped so it stays accurate close to rho = 1; calling it
/// with Branch::Balanced on a drift model evaluates the p == q formula.
double mean_time_formula(const WalkModel &model, std::int64_t i, Branch branch);

/// Drift formula evaluated term by term exactly as printed.
double printed_mean_time(const WalkModel &model, std::int64_t i);

/// Solution m_0 .. m_N of the periodic first-step system
///   (1 - r) m_i = p m_{i+1} + q m_{i-1} + 1        (0 < i < N)
///   (1 - r0) m_0 = p0 m_1 + q0 m_{N-1} + 1 - s0,   m_0 = m_N.
std::vector<double> periodic_mean_times(const WalkModel &model);

/// m_i for any integer i. Falls back to the periodic solve (and records a
/// FormulaDiscrepancy) if the closed form disagrees beyond 1e-9 relative.
double mean_time_any(const WalkModel &model, std::int64_t i,
                     Diagnostics *diag = nullptr);

/// z-derivatives at z = 1 of the spectral quantities (drift branch).
struct DerivativeBundle {
  double dlambda1 = 0.0;
  double dlambda2 = 0.0;
  double dzeta = 0.0;
  /// Chain-rule derivative of omega0(z).
  double domega0 = 0.0;
  /// The printed closed form for domega0; kept for diagnostics only.
  double domega0_printed = 0.0;
  double dxi1 = 0.0;
  double dxi2 = 0.0;
  /// d Omega(z)/dz with Omega(z) = [omega0(z)^2 - 4 p0 q0 rho^N / (p q zeta(z)^2)]^(-1/2).
  double dOmega = 0.0;
  double alpha = 0.0;
};

/// Throws BalancedUnsupported on the balanced branch.
DerivativeBundle spectral_derivatives(const WalkModel &model);

enum class BarrierTimePath {
  /// Product rule on X_kN(z) = Omega(z) (lambda1^N - lambda2^N) xi(z)^k.
  ProofChain,
  /// The printed display, verbatim (Omega with exponent +1/2 and the printed
  /// domega0/dz).
  PrintedDisplay,
};

/// m_{0k} = s0 dX_{kN}/dz at z = 1 for a walk started at barrier 0.
/// Throws BalancedUnsupported (p == q) and StartNotBarrier (i0 != 0).
double mean_time_to_barrier(const WalkModel &model, std::int64_t k,
                            Diagnostics *diag = nullptr);

double mean_time_to_barrier_via(const WalkModel &model, std::int64_t k,
                                BarrierTimePath path);

struct AbsorptionTimes {
  WalkModel model;
  std::vector<double> period_values;          // m_0 .. m_N
  std::map<std::int64_t, double> per_barrier; // k -> m_{0k}; drift, i0 = 0
};

/// Period values always; per-barrier values for k_min..k_max when the model
/// is on the drift branch and starts at 0.
AbsorptionTimes absorption_times(const WalkModel &model, std::int64_t k_min,
                                 std::int64_t k_max,
                                 Diagnostics *diag = nullptr);

} // namespace mfbwalk
