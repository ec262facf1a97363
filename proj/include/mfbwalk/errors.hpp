#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfbwalk {

/// A model parameter violates one of the walk constraints.
class RejectedParameter : public std::invalid_argument {
public:
  RejectedParameter(std::string field, double value, const std::string &why)
      : std::invalid_argument(field + " = " + std::to_string(value) + ": " +
                              why),
        field_(std::move(field)), value_(value) {}

  const std::string &field() const noexcept { return field_; }
  double value() const noexcept { return value_; }

private:
  std::string field_;
  double value_;
};

/// zeta is undefined at z = 1 on the balanced branch (both roots equal 1).
class DegenerateSpectrum : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The per-barrier mean time has no closed form when p == q.
class BalancedUnsupported : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The per-barrier mean time is only defined for a walk started at a barrier.
class StartNotBarrier : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class SingularSystem : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The truncation tail bound is larger than the accuracy that was asked for.
class TruncationInsufficient : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Richardson tableau did not settle within the requested tolerance.
class IllConditioned : public std::runtime_error {
public:
  IllConditioned(const std::string &what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}

  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

private:
  double estimate_;
  double error_;
};

// Diagnostics are findings, not failures: the computation still returns the
// authoritative value and the sink records what disagreed.

enum class DiagnosticKind {
  FormulaDiscrepancy,
  ConsistencyFailure,
  ExcessCensoring,
  NumericExtension,
};

const char *to_string(DiagnosticKind kind) noexcept;

struct Diagnostic {
  DiagnosticKind kind;
  std::string source;  // e.g. "barrier_visits"
  std::string detail;  // human-readable, names both values
  double authoritative = 0.0;
  double alternative = 0.0;
};

using Diagnostics = std::vector<Diagnostic>;

} // namespace mfbwalk
