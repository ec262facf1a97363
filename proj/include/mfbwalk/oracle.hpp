#pragma once

// Independent checks for the closed forms: a truncated banded solve of the
// occupation equations and a seeded Monte-Carlo walker. Nothing here calls
// into visit_engine or absorption_engine; barrier roots are only used to
// pick a truncation depth.

#include "mfbwalk/errors.hpp"
#include "mfbwalk/walk_model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace mfbwalk::oracle {

/// Smallest K such that max(xi2, 1/xi1)^K < 1e-12, plus 5.
std::int64_t default_truncation(const WalkModel &model);

/// max(xi2, 1/xi1)^K.
double tail_bound(const WalkModel &model, std::int64_t K);

/// I - z P^T restricted to sites -K N .. K N. Sites outside are sinks; mass
/// entering them is reported as leak, never as barrier absorption.
class TruncatedSystem {
public:
  TruncatedSystem(const WalkModel &model, std::int64_t K, double z);

  const WalkModel &model() const noexcept { return model_; }
  std::int64_t K() const noexcept { return K_; }
  double z() const noexcept { return z_; }
  std::size_t size() const noexcept { return diag_.size(); }
  std::int64_t first_site() const noexcept { return -K_ * model_.N(); }

  std::span<const double> sub() const noexcept { return sub_; }
  std::span<const double> diag() const noexcept { return diag_; }
  std::span<const double> super() const noexcept { return super_; }

  /// Solves (I - z P^T) x = rhs.
  std::vector<double> solve(std::span<const double> rhs) const;
  /// Unit mass at the start site.
  std::vector<double> unit_start() const;
  /// z P^T v (one step of the restricted chain applied to a mass vector).
  std::vector<double> step(std::span<const double> v) const;

  /// Probability per unit occupation of leaving the truncated window.
  double leak(std::span<const double> occupation) const;
  /// s0 times the occupation summed over barrier sites.
  double absorbed(std::span<const double> occupation) const;

private:
  WalkModel model_;
  std::int64_t K_;
  double z_;
  std::vector<double> sub_, diag_, super_;
};

struct TruncatedVisits {
  std::int64_t K = 0;
  double z = 1.0;
  std::int64_t first_site = 0;
  std::vector<double> values;  // X_j(z) for j = first_site, first_site+1, ...
  double tail_bound = 0.0;
  double absorbed = 0.0;
  double leak = 0.0;

  double at(std::int64_t j) const;
  std::int64_t last_site() const {
    return first_site + static_cast<std::int64_t>(values.size()) - 1;
  }
};

/// X_j(z) on the truncated lattice. Throws TruncationInsufficient when
/// `tolerance` is positive and smaller than the tail bound.
TruncatedVisits truncated_visits(const WalkModel &model, std::int64_t K,
                                 double z, double tolerance = 0.0);

struct TruncatedMeanTimes {
  std::vector<double> period_values;           // m_0 .. m_N (exact solve)
  std::map<std::int64_t, double> per_barrier;  // k -> s0 X'_{kN}(1)
  double total_time = 0.0;  // sum over all sites of X'_j(1): E[steps]
  double tail_bound = 0.0;
  std::int64_t K = 0;
};

/// Exact periodic solve for m_i, plus the per-barrier split from the
/// derivative system (I - P^T) Y = P^T X on the truncated lattice.
TruncatedMeanTimes truncated_mean_times(const WalkModel &model, std::int64_t K,
                                        double tolerance = 0.0);

struct DerivativeEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  std::vector<double> steps;
  bool numeric_extension = false;  // true on the balanced branch
};

/// s0 X'_{kN}(1) from one-sided differences below z = 1, Richardson
/// extrapolated over `steps` (at least three, strictly decreasing). Throws
/// IllConditioned if the tableau error exceeds `tolerance`.
DerivativeEstimate gf_derivative(const WalkModel &model, std::int64_t k,
                                 std::span<const double> steps,
                                 std::int64_t K = 0, double tolerance = 1e-6);

inline constexpr double kDefaultSteps[] = {4e-4, 2e-4, 1e-4, 5e-5, 2.5e-5};

// ---------------------------------------------------------------------------
// Monte Carlo

/// Counter-based stream: output n of walk w is a pure function of
/// (seed, w, n), so any partition of walks across workers draws the same
/// numbers.
class CounterStream {
public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;

  bool operator==(const Estimate &) const = default;
};

struct SimulationOptions {
  std::uint64_t walks = 1'000'000;
  std::uint64_t seed = 42;
  std::uint64_t step_cap = 1'000'000;
  unsigned workers = 1;
  /// Visit means are collected for sites -window*N .. window*N.
  std::int64_t window = 3;
};

struct EmpiricalStats {
  std::uint64_t walks = 0;
  std::uint64_t seed = 0;
  std::uint64_t step_cap = 0;
  std::map<std::int64_t, Estimate> visit_means;     // site -> arrivals
  std::map<std::int64_t, Estimate> absorption_hist; // barrier k -> frequency
  Estimate mean_steps;  // over absorbed walks; absorbing step not counted
  std::uint64_t censored = 0;
  bool excess_censoring = false;

  bool operator==(const EmpiricalStats &) const = default;
};

/// Throws std::invalid_argument when walks == 0. Records ExcessCensoring in
/// `diag` when more than 1e-3 of the walks hit the step cap.
EmpiricalStats simulate(const WalkModel &model, const SimulationOptions &opt,
                        Diagnostics *diag = nullptr);

} // namespace mfbwalk::oracle
