#pragma once

#include "report.hpp"

#include "mfbwalk/errors.hpp"
#include "mfbwalk/oracle.hpp"
#include "mfbwalk/walk_model.hpp"

#include <cstdint>
#include <vector>

namespace mfbwalk::cli {

struct VerifyOptions {
  std::int64_t K = 0; // 0: pick from the closed-form decay rate
  std::vector<double> steps{std::begin(oracle::kDefaultSteps), std::end(oracle::kDefaultSteps)};
  std::uint64_t walks = 1'000'000; // 0 skips the Monte-Carlo checks
  std::uint64_t seed = 42;
  std::uint64_t step_cap = 1'000'000;
  unsigned workers = 1;
  std::int64_t barrier_window = 5; // |k| range for m_{0k}
};

struct VerifyResult {
  std::vector<Row> rows;
  std::vector<GoldenRecord> golden;
  Diagnostics diagnostics;

  bool passed() const;
};

/// Arbitrates every closed form against the truncated solver, the periodic
/// solve, the numeric generating-function derivative and the Monte-Carlo
/// walker.
VerifyResult verify(const WalkModel &model, const VerifyOptions &opt);

/// One row per stored record: pass when the regenerated oracle value with the
/// same quantity, index, oracle and provenance agrees to 1e-9 relative.
std::vector<Row> compare_golden(const std::vector<GoldenRecord> &fresh,
                                const std::vector<GoldenRecord> &stored);

} // namespace mfbwalk::cli
