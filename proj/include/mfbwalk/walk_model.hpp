#pragma once

// Random walk on the integers with a multiple-function barrier at every
// multiple of N. Interior sites step +1 / -1 / hold with p / q / r; barrier
// sites step +1 / -1 / hold / absorb with p0 / q0 / r0 / s0.

#include <cstdint>
#include <optional>
#include <utility>

namespace mfbwalk {

/// Sum-to-one tolerance for the two probability vectors.
inline constexpr double kProbabilityTolerance = 1e-12;

/// |p - q| below this is treated as the balanced (driftless) case.
inline constexpr double kBalanceThreshold = 1e-9;

enum class Branch { Drift, Balanced };

const char *to_string(Branch branch) noexcept;

/// Unvalidated parameter bundle, as read from flags or JSON.
struct RawParameters {
  double p = 0.0, q = 0.0, r = 0.0;
  double p0 = 0.0, q0 = 0.0, r0 = 0.0, s0 = 0.0;
  std::int64_t N = 0;
  std::int64_t i0 = 0;

  bool operator==(const RawParameters &) const = default;
};

/// Validated walk parameters. Only obtainable through validate_model().
class WalkModel {
public:
  double p() const noexcept { return raw_.p; }
  double q() const noexcept { return raw_.q; }
  double r() const noexcept { return raw_.r; }
  double p0() const noexcept { return raw_.p0; }
  double q0() const noexcept { return raw_.q0; }
  double r0() const noexcept { return raw_.r0; }
  double s0() const noexcept { return raw_.s0; }
  std::int64_t N() const noexcept { return raw_.N; }
  std::int64_t i0() const noexcept { return raw_.i0; }

  /// Drift ratio p / q.
  double rho() const noexcept { return raw_.p / raw_.q; }
  Branch branch() const noexcept { return branch_; }
  bool balanced() const noexcept { return branch_ == Branch::Balanced; }

  const RawParameters &parameters() const noexcept { return raw_; }

  /// Same walk started at `start` (must lie in [0, N)).
  WalkModel with_start(std::int64_t start) const;

  bool operator==(const WalkModel &) const = default;

private:
  friend WalkModel validate_model(const RawParameters &raw);
  WalkModel(RawParameters raw, Branch branch) : raw_(raw), branch_(branch) {}

  RawParameters raw_;
  Branch branch_ = Branch::Drift;
};

/// Checks every constraint and returns the model, or throws RejectedParameter.
/// r and r0 are renormalised when the sums are within kProbabilityTolerance.
WalkModel validate_model(const RawParameters &raw);

/// Both roots of a*x^2 + b*x + c = 0 with real, distinct-or-equal roots,
/// larger first. Uses the sign-matched formula for the large-magnitude root
/// and the product of roots for the other.
std::pair<double, double> solve_quadratic(double a, double b, double c);

/// Roots of q z L^2 - (1 - r z) L + p z = 0 with zeta(z).
class SpectralPair {
public:
  SpectralPair(double z, double lambda1, double lambda2,
               std::optional<double> zeta)
      : z_(z), lambda1_(lambda1), lambda2_(lambda2), zeta_(zeta) {}

  double z() const noexcept { return z_; }
  double lambda1() const noexcept { return lambda1_; }
  double lambda2() const noexcept { return lambda2_; }
  bool degenerate() const noexcept { return !zeta_.has_value(); }

  /// [(1 - r z)^2 - 4 p q z^2]^(-1/2); throws DegenerateSpectrum when the two
  /// roots coincide.
  double zeta() const;

private:
  double z_;
  double lambda1_;
  double lambda2_;
  std::optional<double> zeta_;
};

SpectralPair lambda_pair(const WalkModel &model, double z);

/// Barrier-level recurrence data at z = 1.
struct BarrierSpectrum {
  Branch branch = Branch::Drift;
  /// Drift branch only.
  std::optional<double> omega0;
  /// Balanced branch only: -(p0 + q0 + N s0).
  std::optional<double> psi0;
  double xi1 = 0.0; // > 1
  double xi2 = 0.0; // in (0, 1)
  /// Drift branch only: [omega0^2 - 4 p0 q0 (1 - rho)^2 rho^(N-1)]^(-1/2).
  std::optional<double> Omega;
  /// r (1 - r) + 4 p q.
  double alpha = 0.0;
  /// Coefficients of the barrier quadratic a xi^2 + b xi + c = 0.
  double quad_a = 0.0, quad_b = 0.0, quad_c = 0.0;
};

BarrierSpectrum barrier_spectrum(const WalkModel &model);

/// omega0(z) for 0 < z <= 1 (drift branch; zero at z = 1 when balanced).
double omega0_at(const WalkModel &model, double z);

/// rho^m - 1 without cancellation near rho = 1.
double rho_pow_m1(double rho, double m);

/// lambda1^m - lambda2^m at z = 1 where {lambda1, lambda2} = {max, min}(1, rho).
double lambda_pow_diff(double rho, double m);

} // namespace mfbwalk
