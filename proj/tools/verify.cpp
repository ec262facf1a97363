#include "verify.hpp"

#include "mfbwalk/absorption_engine.hpp"
#include "mfbwalk/oracle.hpp"
#include "mfbwalk/visit_engine.hpp"

#include <algorithm>
#include <cmath>

namespace mfbwalk::cli {

using nlohmann::json;

namespace {

constexpr double kVisitTolerance = 1e-8;     // relative
constexpr double kMassTolerance = 1e-10;   // absolute
constexpr double kResidualTolerance = 1e-10; // absolute
constexpr double kPeriodicTolerance = 1e-10; // relative
constexpr double kBookkeepingTolerance = 1e-8;
constexpr double kBarrierTimeTolerance = 1e-6; // relative
constexpr double kSigmas = 4.0;

Row compare(std::string quantity, json index, double closed, double oracle,
            double tolerance) {
  Row r{std::move(quantity), std::move(index), closed, oracle, tolerance,
        std::nullopt, std::nullopt};
  r.pass = std::abs(closed - oracle) <= tolerance;
  return r;
}

double relative(double tol, double reference) {
  return tol * std::max(std::abs(reference), 1e-30);
}

} // namespace

bool VerifyResult::passed() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const Row &r) { return !r.pass || *r.pass; });
}

VerifyResult verify(const WalkModel &model, const VerifyOptions &opt) {
  VerifyResult out;
  const json jmodel = model_to_json(model);
  const std::int64_t N = model.N();
  const std::int64_t K = opt.K > 0 ? opt.K : oracle::default_truncation(model);

  // Total absorption and expected arrivals.
  const oracle::TruncatedVisits tv = oracle::truncated_visits(model, K, 1.0);
  out.rows.push_back(compare("total_absorption", "", total_absorption(model),
                             tv.absorbed + tv.leak, kMassTolerance));
  out.rows.push_back(
      compare("total_absorption_closed", "", total_absorption(model), 1.0,
              kMassTolerance));

  for (std::int64_t j = -3 * N; j <= 3 * N; ++j) {
    const double closed = site_visits(model, j, &out.diagnostics);
    const double orc = tv.at(j);
    out.rows.push_back(
        compare("x", j, closed, orc, relative(kVisitTolerance, orc)));
    out.golden.push_back({jmodel, "x", j, orc,
                          tv.tail_bound * std::max(orc, 1.0),
                          "truncated_solver", json{{"K", K}}});
  }
  for (std::int64_t k = -3; k <= 3; ++k) {
    const double closed = absorption_mass(model, k);
    const double orc = model.s0() * tv.at(k * N);
    out.rows.push_back(compare("absorption_mass", k, closed, orc,
                               relative(kVisitTolerance, orc)));
  }

  // Difference-equation residuals.
  for (std::int64_t k = -3; k <= 3; ++k)
    out.rows.push_back(compare("barrier_residual", k,
                               barrier_recurrence_residual(model, k), 0.0,
                               kResidualTolerance));
  for (std::int64_t j = -3 * N; j <= 3 * N; ++j) {
    const std::int64_t n = j - floor_div(j, N) * N;
    if (n == 0 || n == 1 || n == N - 1 || j == model.i0())
      continue;
    out.rows.push_back(compare("interior_residual", j,
                               interior_balance_residual(model, j), 0.0,
                               kResidualTolerance));
  }

  // Mean absorption times.
  const oracle::TruncatedMeanTimes tm = oracle::truncated_mean_times(model, K);
  for (std::int64_t i = 0; i <= N; ++i) {
    const double closed = mean_time_formula(model, i, model.branch());
    const double orc = tm.period_values[static_cast<std::size_t>(i)];
    out.rows.push_back(
        compare("m", i, closed, orc, relative(kPeriodicTolerance, orc)));
    out.golden.push_back(
        {jmodel, "m", i, orc, 1e-12 * orc, "periodic_solve", json::object()});
    (void)mean_time_any(model, i, &out.diagnostics);
  }
  {
    const double m_start = tm.period_values[static_cast<std::size_t>(model.i0())];
    double total_visits = 0.0;
    for (double v : tv.values)
      total_visits += v;
    out.rows.push_back(compare("total_visits", "", m_start + 1.0, total_visits,
                               relative(kBookkeepingTolerance, total_visits)));
    out.rows.push_back(compare("absorption_time_mass", "", m_start,
                               tm.total_time,
                               relative(kBookkeepingTolerance, m_start)));
  }

  // Per-barrier mean times (start at a barrier only).
  if (model.i0() == 0) {
    for (std::int64_t k = -opt.barrier_window; k <= opt.barrier_window; ++k) {
      oracle::DerivativeEstimate est;
      try {
        est = oracle::gf_derivative(model, k, opt.steps, K, 1.0);
      } catch (const IllConditioned &e) {
        est.value = e.estimate();
        est.error_estimate = e.error();
      }
      out.golden.push_back({jmodel, "m0k", k, est.value, est.error_estimate,
                            "gf_derivative", json{{"K", K}, {"steps", opt.steps}}});
      if (model.balanced()) {
        Row r{"m0k", k, std::nullopt, est.value, std::nullopt, std::nullopt,
              std::nullopt};
        out.rows.push_back(r);
        continue;
      }
      const double closed = mean_time_to_barrier(model, k, &out.diagnostics);
      out.rows.push_back(compare("m0k", k, closed, est.value,
                                 relative(kBarrierTimeTolerance, est.value)));
    }
    if (model.balanced())
      out.diagnostics.push_back(
          {DiagnosticKind::NumericExtension, "verify",
           "m0k for p == q comes from the numeric derivative only; no closed "
           "form exists",
           0.0, 0.0});
  }

  // Monte Carlo.
  if (opt.walks > 0) {
    oracle::SimulationOptions so;
    so.walks = opt.walks;
    so.seed = opt.seed;
    so.step_cap = opt.step_cap;
    so.workers = opt.workers;
    so.window = 2;
    const oracle::EmpiricalStats st =
        oracle::simulate(model, so, &out.diagnostics);
    const json prov{{"seed", opt.seed}, {"walks", opt.walks},
                    {"step_cap", opt.step_cap}};
    const double m_start = mean_time_any(model, model.i0());
    out.rows.push_back(compare("mc_mean_steps", "", m_start, st.mean_steps.mean,
                               kSigmas * st.mean_steps.stderr_));
    out.golden.push_back({jmodel, "mc_mean_steps", "", st.mean_steps.mean,
                          st.mean_steps.stderr_, "monte_carlo", prov});
    for (std::int64_t k = -2; k <= 2; ++k) {
      const auto it = st.absorption_hist.find(k);
      const oracle::Estimate e =
          it == st.absorption_hist.end() ? oracle::Estimate{} : it->second;
      const double mass = absorption_mass(model, k);
      // Floor the error at the binomial value so an unobserved barrier does
      // not get a zero tolerance.
      const double binomial =
          std::sqrt(mass * (1.0 - mass) / static_cast<double>(opt.walks));
      out.rows.push_back(compare("mc_absorption_freq", k, mass, e.mean,
                                 kSigmas * std::max(e.stderr_, binomial)));
      out.golden.push_back({jmodel, "mc_absorption_freq", k, e.mean, e.stderr_,
                            "monte_carlo", prov});
    }
    for (std::int64_t j = -N; j <= N; ++j) {
      const oracle::Estimate &e = st.visit_means.at(j);
      out.rows.push_back(compare("mc_visits", j, site_visits(model, j), e.mean,
                                 kSigmas * e.stderr_));
    }
  }
  return out;
}

std::vector<Row> compare_golden(const std::vector<GoldenRecord> &fresh,
                                const std::vector<GoldenRecord> &stored) {
  std::vector<Row> rows;
  for (const GoldenRecord &g : stored) {
    const auto it = std::find_if(fresh.begin(), fresh.end(), [&](const auto &f) {
      return f.quantity == g.quantity && f.index == g.index &&
             f.oracle == g.oracle && f.provenance == g.provenance &&
             f.model == g.model;
    });
    Row r{"golden:" + g.quantity, g.index, std::nullopt, g.value,
          1e-9 * std::max(1.0, std::abs(g.value)), std::nullopt, false};
    if (it != fresh.end()) {
      r.closed_form = it->value;
      r.pass = std::abs(it->value - g.value) <= *r.tolerance;
    }
    rows.push_back(r);
  }
  return rows;
}

} // namespace mfbwalk::cli
