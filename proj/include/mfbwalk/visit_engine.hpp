#pragma once

// Expected number of arrivals x_j (time-zero occupation of the start site
// included), barrier absorption masses and reach probabilities.

#include "mfbwalk/errors.hpp"
#include "mfbwalk/walk_model.hpp"

#include <cstdint>
#include <map>

namespace mfbwalk {

/// Geometric barrier solution x_{kN} = C1 xi1^k (k <= 0), K2 xi2^k (k >= 1).
struct BarrierCoefficients {
  double C1 = 0.0;
  double K2 = 0.0;
  double xi1 = 0.0;
  double xi2 = 0.0;
};

/// Solves the two boundary conditions at k = 0 and k = 1 of the barrier
/// recurrence for C1 and K2.
BarrierCoefficients barrier_coefficients(const WalkModel &model);

/// x_{kN}. When `diag` is given, also evaluates the printed closed-form
/// solution and records a FormulaDiscrepancy beyond 1e-9 relative.
double barrier_visits(const WalkModel &model, std::int64_t k,
                      Diagnostics *diag = nullptr);

/// Printed closed-form solution for x_{kN}, evaluated verbatim.
double printed_barrier_visits(const WalkModel &model, std::int64_t k);

/// x_j for any site. Barrier sites delegate to barrier_visits().
double site_visits(const WalkModel &model, std::int64_t j,
                   Diagnostics *diag = nullptr);

/// Printed site formula verbatim; for k != 0 on the drift branch this uses
/// rho^(n - kN) where the local offset rho^n is correct.
double printed_site_visits(const WalkModel &model, std::int64_t j);

/// s0 * x_{kN}: probability of absorption at barrier kN.
double absorption_mass(const WalkModel &model, std::int64_t k);

/// Sum over all k of s0 x_{kN}, via the two geometric series. Equals 1.
double total_absorption(const WalkModel &model);

/// Probability of ever reaching j from i (f_ii is the return probability).
/// The start is re-anchored into [0, N) by shifting both sites by
/// floor(i / N) * N, which leaves the lattice unchanged.
double reach_probability(const WalkModel &model, std::int64_t i,
                         std::int64_t j);

/// Barrier recurrence residual at k (drift or balanced form, right-hand side
/// subtracted). Zero up to rounding.
double barrier_recurrence_residual(const WalkModel &model, std::int64_t k);

/// (1 - r) x_j - p x_{j-1} - q x_{j+1}. Zero at interior sites that are not
/// the start and have no barrier neighbour.
double interior_balance_residual(const WalkModel &model, std::int64_t j);

struct VisitProfile {
  WalkModel model;
  double barrier_coeff_left = 0.0;  // C1
  double barrier_coeff_right = 0.0; // K2
  std::int64_t k_min = 0;
  std::int64_t k_max = 0;
  std::map<std::int64_t, double> values; // site -> x_j

  double at(std::int64_t j) const;
};

/// Materialises x_j for sites k_min*N .. k_max*N.
VisitProfile visit_profile(const WalkModel &model, std::int64_t k_min,
                           std::int64_t k_max);

std::int64_t floor_div(std::int64_t a, std::int64_t b);

} // namespace mfbwalk
