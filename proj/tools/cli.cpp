#include "cli.hpp"

#include "report.hpp"
#include "verify.hpp"

#include "mfbwalk/absorption_engine.hpp"
#include "mfbwalk/oracle.hpp"
#include "mfbwalk/visit_engine.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <thread>

namespace mfbwalk::cli {

using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MissingInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model_path;
  std::optional<double> p, q, r, p0, q0, r0, s0;
  std::optional<std::int64_t> N, i0;

  std::string window = "-3..3";
  std::string output = "json";
  std::int64_t K = 0;
  std::vector<double> steps{std::begin(oracle::kDefaultSteps), std::end(oracle::kDefaultSteps)};
  std::uint64_t walks = 1'000'000;
  std::uint64_t seed = 42;
  std::uint64_t step_cap = 1'000'000;
  unsigned workers = std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
  std::optional<std::int64_t> from, to;
  std::string golden_path;
  bool bless = false;
  bool strict_formulas = false;
};

void add_model_options(CLI::App *cmd, Options &o) {
  cmd->add_option("--model", o.model_path,
                  "Model JSON {p,q,r,p0,q0,r0,s0,N,i0}");
  cmd->add_option("--p", o.p, "Interior forward probability");
  cmd->add_option("--q", o.q, "Interior backward probability");
  cmd->add_option("--r", o.r, "Interior hold probability (default 1-p-q)");
  cmd->add_option("--p0", o.p0, "Barrier forward probability");
  cmd->add_option("--q0", o.q0, "Barrier backward probability");
  cmd->add_option("--r0", o.r0, "Barrier hold probability (default 1-p0-q0-s0)");
  cmd->add_option("--s0", o.s0, "Barrier absorption probability");
  cmd->add_option("--N", o.N, "Barrier spacing");
  cmd->add_option("--i0", o.i0, "Start site in [0, N)");
  cmd->add_option("--output", o.output, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_flag("--strict-formulas", o.strict_formulas,
                "Exit 3 when a printed formula disagrees with the "
                "authoritative evaluation");
}

void add_window(CLI::App *cmd, Options &o) {
  cmd->add_option("--window", o.window, "Barrier index range a..b");
}

void add_truncation(CLI::App *cmd, Options &o) {
  cmd->add_option("--K", o.K, "Truncation depth in barriers (0 = automatic)");
}

void add_simulation(CLI::App *cmd, Options &o) {
  cmd->add_option("--walks", o.walks, "Monte-Carlo walks");
  cmd->add_option("--seed", o.seed, "Monte-Carlo seed");
  cmd->add_option("--step-cap", o.step_cap, "Steps after which a walk is censored");
  cmd->add_option("--workers", o.workers, "Worker threads");
}

WalkModel load_model(const Options &o) {
  RawParameters raw;
  bool have_file = false;
  if (!o.model_path.empty()) {
    std::ifstream in(o.model_path);
    if (!in)
      throw MissingInput("cannot open model file '" + o.model_path + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error &e) {
      throw SchemaError("model file '" + o.model_path +
                        "' is not valid JSON: " + e.what());
    }
    raw = model_from_json(j);
    have_file = true;
  }
  auto need = [&](const std::optional<double> &v, const char *name,
                  double &slot) {
    if (v)
      slot = *v;
    else if (!have_file)
      throw UsageError(std::string("missing --") + name + " (or --model)");
  };
  need(o.p, "p", raw.p);
  need(o.q, "q", raw.q);
  need(o.p0, "p0", raw.p0);
  need(o.q0, "q0", raw.q0);
  need(o.s0, "s0", raw.s0);
  if (o.N)
    raw.N = *o.N;
  else if (!have_file)
    throw UsageError("missing --N (or --model)");
  if (o.i0)
    raw.i0 = *o.i0;
  else if (!have_file)
    raw.i0 = 0;

  if (o.r)
    raw.r = *o.r;
  else if (!have_file || o.p || o.q)
    raw.r = 1.0 - raw.p - raw.q;
  if (o.r0)
    raw.r0 = *o.r0;
  else if (!have_file || o.p0 || o.q0 || o.s0)
    raw.r0 = 1.0 - raw.p0 - raw.q0 - raw.s0;
  return validate_model(raw);
}

std::pair<std::int64_t, std::int64_t> parse_window(const std::string &text) {
  static const std::regex re(R"(\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw UsageError("--window must look like a..b, got '" + text + "'");
  const std::int64_t a = std::stoll(m[1]), b = std::stoll(m[2]);
  if (a > b)
    throw UsageError("--window lower bound exceeds upper bound");
  return {a, b};
}

std::int64_t truncation(const WalkModel &model, const Options &o) {
  return o.K > 0 ? o.K : oracle::default_truncation(model);
}

double rel_tol(double tol, double reference) {
  return tol * std::max(std::abs(reference), 1e-30);
}

Row make_row(std::string quantity, json index, std::optional<double> closed,
             std::optional<double> orc, std::optional<double> tol) {
  return Row{std::move(quantity), std::move(index), closed, orc, tol,
             std::nullopt, std::nullopt};
}

struct Outcome {
  std::vector<Row> rows;
  std::string extra_column;
  Diagnostics diagnostics;
  bool discrepancy = false;
};

Outcome cmd_visits(const WalkModel &model, const Options &o) {
  Outcome out;
  out.extra_column = "absorption_mass";
  const auto [ka, kb] = parse_window(o.window);
  const std::int64_t N = model.N();
  const std::int64_t K =
      std::max(truncation(model, o), std::max(std::abs(ka), std::abs(kb)) + 3);
  const oracle::TruncatedVisits tv = oracle::truncated_visits(model, K, 1.0);
  for (std::int64_t j = ka * N; j <= kb * N; ++j) {
    const double x = site_visits(model, j, &out.diagnostics);
    const double orc = tv.at(j);
    Row r = make_row("x", j, x, orc, rel_tol(1e-8, orc));
    if (j % N == 0)
      r.absorption_mass = model.s0() * x;
    out.rows.push_back(std::move(r));
  }
  return out;
}

Outcome cmd_absorb_dist(const WalkModel &model, const Options &o) {
  Outcome out;
  const auto [ka, kb] = parse_window(o.window);
  const std::int64_t K =
      std::max(truncation(model, o), std::max(std::abs(ka), std::abs(kb)) + 3);
  const oracle::TruncatedVisits tv = oracle::truncated_visits(model, K, 1.0);
  for (std::int64_t k = ka; k <= kb; ++k) {
    (void)barrier_visits(model, k, &out.diagnostics);
    const double orc = model.s0() * tv.at(k * model.N());
    out.rows.push_back(make_row("absorption_mass", k, absorption_mass(model, k),
                                orc, rel_tol(1e-8, orc)));
  }
  out.rows.push_back(make_row("total_absorption", "", total_absorption(model),
                              tv.absorbed + tv.leak, 1e-10));
  return out;
}

Outcome cmd_reach(const WalkModel &model, const Options &o) {
  if (!o.from || !o.to)
    throw UsageError("reach requires --from and --to");
  Outcome out;
  const std::int64_t i = *o.from, j = *o.to, N = model.N();
  const std::int64_t span = std::abs(i - j) / N + 4;
  const std::int64_t K = std::max(truncation(model, o), span);
  auto oracle_visits = [&](std::int64_t from, std::int64_t to) {
    const std::int64_t shift = floor_div(from, N) * N;
    return oracle::truncated_visits(model.with_start(from - shift), K, 1.0)
        .at(to - shift);
  };
  const double x_jj = oracle_visits(j, j);
  const double orc = i == j ? 1.0 - 1.0 / x_jj : oracle_visits(i, j) / x_jj;
  const double closed = reach_probability(model, i, j);
  out.rows.push_back(make_row("reach_probability",
                              std::to_string(i) + ":" + std::to_string(j),
                              closed, orc, rel_tol(1e-8, orc)));
  return out;
}

Outcome cmd_mean_time(const WalkModel &model, const Options &o) {
  Outcome out;
  const oracle::TruncatedMeanTimes tm =
      oracle::truncated_mean_times(model, std::max<std::int64_t>(truncation(model, o), 3));
  for (std::int64_t i = 0; i <= model.N(); ++i) {
    const double orc = tm.period_values[static_cast<std::size_t>(i)];
    out.rows.push_back(make_row("m", i, mean_time_any(model, i, &out.diagnostics),
                                orc, rel_tol(1e-10, orc)));
  }
  return out;
}

Outcome cmd_barrier_time(const WalkModel &model, const Options &o) {
  if (model.i0() != 0)
    throw StartNotBarrier("barrier-time requires i0 = 0, got i0 = " +
                          std::to_string(model.i0()));
  Outcome out;
  const auto [ka, kb] = parse_window(o.window);
  const std::int64_t K = truncation(model, o);
  for (std::int64_t k = ka; k <= kb; ++k) {
    oracle::DerivativeEstimate est;
    try {
      est = oracle::gf_derivative(model, k, o.steps, K, 1.0);
    } catch (const IllConditioned &e) {
      est.value = e.estimate();
    }
    std::optional<double> closed;
    if (!model.balanced())
      closed = mean_time_to_barrier(model, k, &out.diagnostics);
    out.rows.push_back(make_row("m0k", k, closed, est.value,
                                rel_tol(1e-6, est.value)));
  }
  if (model.balanced())
    out.diagnostics.push_back(
        {DiagnosticKind::NumericExtension, "barrier-time",
         "p == q: values are the numeric generating-function derivative "
         "only; no closed form exists",
         0.0, 0.0});
  return out;
}

Outcome cmd_simulate(const WalkModel &model, const Options &o) {
  Outcome out;
  const auto [ka, kb] = parse_window(o.window);
  oracle::SimulationOptions so;
  so.walks = o.walks;
  so.seed = o.seed;
  so.step_cap = o.step_cap;
  so.workers = o.workers;
  so.window = std::max(std::abs(ka), std::abs(kb));
  if (o.walks == 0)
    throw UsageError("--walks must be >= 1");
  const oracle::EmpiricalStats st = oracle::simulate(model, so, &out.diagnostics);

  out.rows.push_back(make_row("mc_mean_steps", "", mean_time_any(model, model.i0()),
                              st.mean_steps.mean, 4.0 * st.mean_steps.stderr_));
  for (std::int64_t k = ka; k <= kb; ++k) {
    const auto it = st.absorption_hist.find(k);
    const oracle::Estimate e =
        it == st.absorption_hist.end() ? oracle::Estimate{} : it->second;
    out.rows.push_back(make_row("mc_absorption_freq", k,
                                absorption_mass(model, k), e.mean,
                                4.0 * e.stderr_));
  }
  for (std::int64_t j = ka * model.N(); j <= kb * model.N(); ++j) {
    const oracle::Estimate &e = st.visit_means.at(j);
    out.rows.push_back(make_row("mc_visits", j, site_visits(model, j), e.mean,
                                4.0 * e.stderr_));
  }
  out.rows.push_back(make_row("censored_fraction", "", 0.0,
                              static_cast<double>(st.censored) /
                                  static_cast<double>(st.walks),
                              1e-3));
  return out;
}

Outcome cmd_verify(const WalkModel &model, const Options &o) {
  Outcome out;
  out.extra_column = "pass";
  VerifyOptions vo;
  vo.K = o.K;
  vo.steps = o.steps;
  vo.walks = o.walks;
  vo.seed = o.seed;
  vo.step_cap = o.step_cap;
  vo.workers = o.workers;
  VerifyResult res = verify(model, vo);

  if (o.bless) {
    if (o.golden_path.empty())
      throw UsageError("--bless requires --golden <file>");
    std::ofstream f(o.golden_path);
    if (!f)
      throw MissingInput("cannot write golden file '" + o.golden_path + "'");
    f << golden_to_json(res.golden).dump(2) << '\n';
  } else if (!o.golden_path.empty()) {
    std::ifstream f(o.golden_path);
    if (!f)
      throw MissingInput("cannot open golden file '" + o.golden_path + "'");
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error &e) {
      throw SchemaError("golden file is not valid JSON: " + std::string(e.what()));
    }
    for (Row &r : compare_golden(res.golden, golden_from_json(j)))
      res.rows.push_back(std::move(r));
  }
  out.discrepancy = !res.passed();
  out.rows = std::move(res.rows);
  out.diagnostics = std::move(res.diagnostics);
  return out;
}

void print_diagnostics(const Diagnostics &diags, std::ostream &err) {
  std::set<std::string> seen;
  for (const Diagnostic &d : diags) {
    std::string line = std::string(to_string(d.kind)) + " [" + d.source +
                       "] " + d.detail;
    if (seen.insert(line).second)
      err << "mfbwalk: " << line << '\n';
  }
}

bool has_formula_discrepancy(const Diagnostics &diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic &d) {
    return d.kind == DiagnosticKind::FormulaDiscrepancy;
  });
}

} // namespace

int run(std::span<const std::string> args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Closed forms and oracles for a random walk with equidistant "
               "multiple-function barriers",
               "mfbwalk"};
  app.require_subcommand(1);
  Options o;

  auto *visits = app.add_subcommand("visits", "Expected arrivals x_j");
  auto *absorb = app.add_subcommand("absorb-dist", "Absorption mass per barrier");
  auto *reach = app.add_subcommand("reach", "Probability of reaching --to from --from");
  auto *mean = app.add_subcommand("mean-time", "Mean absorption time m_i");
  auto *barrier = app.add_subcommand("barrier-time",
                                     "Mean time before absorption in barrier kN (i0 = 0)");
  auto *sim = app.add_subcommand("simulate", "Monte-Carlo estimates");
  auto *ver = app.add_subcommand("verify", "Check every closed form against the oracles");

  for (auto *cmd : {visits, absorb, reach, mean, barrier, sim, ver})
    add_model_options(cmd, o);
  for (auto *cmd : {visits, absorb, barrier, sim})
    add_window(cmd, o);
  for (auto *cmd : {visits, absorb, reach, mean, barrier, ver})
    add_truncation(cmd, o);
  for (auto *cmd : {sim, ver})
    add_simulation(cmd, o);
  for (auto *cmd : {barrier, ver})
    cmd->add_option("--steps", o.steps, "Finite-difference step sizes")
        ->delimiter(',');
  reach->add_option("--from", o.from, "Start site i");
  reach->add_option("--to", o.to, "Target site j");
  ver->add_option("--golden", o.golden_path, "Golden-value file to diff against");
  ver->add_flag("--bless", o.bless, "Rewrite the golden-value file");

  std::vector<const char *> argv{"mfbwalk"};
  for (const std::string &a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  CLI::App *cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    const WalkModel model = load_model(o);
    Outcome result;
    if (name == "visits")
      result = cmd_visits(model, o);
    else if (name == "absorb-dist")
      result = cmd_absorb_dist(model, o);
    else if (name == "reach")
      result = cmd_reach(model, o);
    else if (name == "mean-time")
      result = cmd_mean_time(model, o);
    else if (name == "barrier-time")
      result = cmd_barrier_time(model, o);
    else if (name == "simulate")
      result = cmd_simulate(model, o);
    else
      result = cmd_verify(model, o);

    const OutputFormat fmt =
        o.output == "csv" ? OutputFormat::Csv : OutputFormat::Json;
    write_report(out, fmt, name, model, result.rows, result.extra_column);
    print_diagnostics(result.diagnostics, err);
    if (result.discrepancy)
      return kExitDiscrepancy;
    if (o.strict_formulas && has_formula_discrepancy(result.diagnostics))
      return kExitDiscrepancy;
    return kExitOk;
  } catch (const UsageError &e) {
    err << "mfbwalk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MissingInput &e) {
    err << "mfbwalk: " << e.what() << '\n';
    return kExitNoInput;
  } catch (const RejectedParameter &e) {
    err << "mfbwalk: invalid model: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SchemaError &e) {
    err << "mfbwalk: invalid model: " << e.what() << '\n';
    return kExitValidation;
  } catch (const StartNotBarrier &e) {
    err << "mfbwalk: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception &e) {
    err << "mfbwalk: " << e.what() << '\n';
    return kExitValidation;
  }
}

} // namespace mfbwalk::cli
