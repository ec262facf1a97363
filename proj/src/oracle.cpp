#include "mfbwalk/oracle.hpp"

#include "mfbwalk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mfbwalk::oracle {

namespace {

constexpr double kTailTarget = 1e-12;

struct Moves {
  double forward, backward, hold;
};

Moves moves_at(const WalkModel &m, std::int64_t site) {
  if (site % m.N() == 0)
    return {m.p0(), m.q0(), m.r0()};
  return {m.p(), m.q(), m.r()};
}

double decay_rate(const WalkModel &model) {
  const BarrierSpectrum bs = barrier_spectrum(model);
  return std::max(bs.xi2, 1.0 / bs.xi1);
}

void check_truncation(std::int64_t K) {
  if (K < 3)
    throw std::invalid_argument("truncation K must be >= 3, got " +
                                std::to_string(K));
}

void check_tail(double tail, double tolerance) {
  if (tolerance > 0.0 && tail > tolerance) {
    std::ostringstream os;
    os << "truncation tail bound " << tail << " exceeds tolerance "
       << tolerance;
    throw TruncationInsufficient(os.str());
  }
}

} // namespace

double tail_bound(const WalkModel &model, std::int64_t K) {
  return std::pow(decay_rate(model), static_cast<double>(K));
}

std::int64_t default_truncation(const WalkModel &model) {
  const double rate = decay_rate(model);
  return static_cast<std::int64_t>(
             std::ceil(std::log(kTailTarget) / std::log(rate))) +
         5;
}

TruncatedSystem::TruncatedSystem(const WalkModel &model, std::int64_t K,
                                 double z)
    : model_(model), K_(K), z_(z) {
  check_truncation(K);
  if (!(z > 0.0 && z <= 1.0))
    throw RejectedParameter("z", z, "must lie in (0, 1]");
  const std::int64_t lo = -K * model.N();
  const auto n = static_cast<std::size_t>(2 * K * model.N() + 1);
  sub_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  super_.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const std::int64_t j = lo + static_cast<std::int64_t>(a);
    diag_[a] = 1.0 - z * moves_at(model, j).hold;
    if (a > 0)
      sub_[a] = -z * moves_at(model, j - 1).forward;
    if (a + 1 < n)
      super_[a] = -z * moves_at(model, j + 1).backward;
  }
}

std::vector<double> TruncatedSystem::solve(std::span<const double> rhs) const {
  return linalg::solve_tridiagonal(sub_, diag_, super_, rhs);
}

std::vector<double> TruncatedSystem::unit_start() const {
  std::vector<double> e(size(), 0.0);
  e[static_cast<std::size_t>(model_.i0() - first_site())] = 1.0;
  return e;
}

std::vector<double> TruncatedSystem::step(std::span<const double> v) const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    double s = (1.0 - diag_[a]) * v[a];
    if (a > 0)
      s -= sub_[a] * v[a - 1];
    if (a + 1 < n)
      s -= super_[a] * v[a + 1];
    out[a] = s;
  }
  return out;
}

double TruncatedSystem::leak(std::span<const double> occupation) const {
  const std::int64_t lo = first_site();
  const std::int64_t hi = lo + static_cast<std::int64_t>(size()) - 1;
  return occupation.front() * moves_at(model_, lo).backward +
         occupation.back() * moves_at(model_, hi).forward;
}

double TruncatedSystem::absorbed(std::span<const double> occupation) const {
  double total = 0.0;
  const auto N = static_cast<std::size_t>(model_.N());
  for (std::size_t a = 0; a < occupation.size(); a += N)
    total += occupation[a];
  return model_.s0() * total;
}

double TruncatedVisits::at(std::int64_t j) const {
  if (j < first_site || j > last_site())
    throw std::out_of_range("site " + std::to_string(j) +
                            " outside the truncated window");
  return values[static_cast<std::size_t>(j - first_site)];
}

TruncatedVisits truncated_visits(const WalkModel &model, std::int64_t K,
                                 double z, double tolerance) {
  check_truncation(K);
  TruncatedVisits tv;
  tv.K = K;
  tv.z = z;
  tv.tail_bound = tail_bound(model, K);
  check_tail(tv.tail_bound, tolerance);

  const TruncatedSystem sys(model, K, z);
  tv.first_site = sys.first_site();
  tv.values = sys.solve(sys.unit_start());
  tv.absorbed = sys.absorbed(tv.values);
  tv.leak = sys.leak(tv.values);
  return tv;
}

namespace {

// m_i = g_i + t with g solving the interior equations for zero boundary
// values; the barrier equation then fixes t = m_0 = m_N.
std::vector<double> periodic_by_superposition(const WalkModel &model) {
  const auto N = static_cast<std::size_t>(model.N());
  const std::size_t n = N - 1;
  std::vector<double> sub(n, -model.q()), diag(n, 1.0 - model.r()),
      super(n, -model.p()), rhs(n, 1.0);
  const std::vector<double> g =
      linalg::solve_tridiagonal(sub, diag, super, rhs);
  const double t =
      (model.p0() * g.front() + model.q0() * g.back() + 1.0 - model.s0()) /
      model.s0();
  std::vector<double> m;
  m.reserve(N + 1);
  m.push_back(t);
  for (double gi : g)
    m.push_back(gi + t);
  m.push_back(t);
  return m;
}

} // namespace

TruncatedMeanTimes truncated_mean_times(const WalkModel &model, std::int64_t K,
                                        double tolerance) {
  check_truncation(K);
  TruncatedMeanTimes out;
  out.K = K;
  out.period_values = periodic_by_superposition(model);
  out.tail_bound = tail_bound(model, K);
  check_tail(out.tail_bound, tolerance);

  const TruncatedSystem sys(model, K, 1.0);
  const std::vector<double> x = sys.solve(sys.unit_start());
  const std::vector<double> y = sys.solve(sys.step(x));
  const std::int64_t N = model.N();
  for (std::int64_t k = -K; k <= K; ++k) {
    const double v =
        model.s0() * y[static_cast<std::size_t>(k * N - sys.first_site())];
    out.per_barrier.emplace(k, v);
    out.total_time += v;
  }
  return out;
}

DerivativeEstimate gf_derivative(const WalkModel &model, std::int64_t k,
                                 std::span<const double> steps, std::int64_t K,
                                 double tolerance) {
  if (steps.size() < 3)
    throw std::invalid_argument("gf_derivative: need at least three steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i] > 0.0 && steps[i] < 1.0) ||
        (i > 0 && !(steps[i] < steps[i - 1])))
      throw std::invalid_argument(
          "gf_derivative: steps must be in (0, 1) and strictly decreasing");
  }
  if (K == 0)
    K = default_truncation(model);
  K = std::max<std::int64_t>(K, std::abs(k) + 3);

  const std::int64_t site = k * model.N();
  auto X = [&](double z) {
    const TruncatedSystem sys(model, K, z);
    const std::vector<double> v = sys.solve(sys.unit_start());
    return v[static_cast<std::size_t>(site - sys.first_site())];
  };

  const double at_one = X(1.0);
  const std::size_t n = steps.size();
  std::vector<std::vector<double>> T(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = steps[i];
    T[i].push_back((at_one - X(1.0 - h)) / h);
    // Neville extrapolation to h = 0.
    for (std::size_t j = 1; j <= i; ++j) {
      const double hi = steps[i], hij = steps[i - j];
      T[i].push_back(T[i][j - 1] +
                     (T[i][j - 1] - T[i - 1][j - 1]) * hi / (hij - hi));
    }
  }

  DerivativeEstimate est;
  est.steps.assign(steps.begin(), steps.end());
  est.value = model.s0() * T[n - 1][n - 1];
  est.error_estimate = model.s0() * std::abs(T[n - 1][n - 1] - T[n - 1][n - 2]);
  est.numeric_extension = model.balanced();
  if (est.error_estimate > tolerance * std::max(std::abs(est.value), 1e-300)) {
    std::ostringstream os;
    os << "gf_derivative: Richardson error " << est.error_estimate
       << " exceeds relative tolerance " << tolerance << " at k=" << k;
    throw IllConditioned(os.str(), est.value, est.error_estimate);
  }
  return est;
}

// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(seed ^ mix64(stream * kGamma + kGamma))) {}

std::uint64_t CounterStream::next() noexcept {
  return mix64(key_ + (++counter_) * kGamma);
}

double CounterStream::uniform() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

namespace {

__extension__ typedef unsigned __int128 Wide;

struct Tally {
  std::uint64_t absorbed = 0;
  std::uint64_t censored = 0;
  Wide steps = 0;
  Wide steps_sq = 0;
  std::map<std::int64_t, std::uint64_t> absorbed_at;
  std::vector<std::uint64_t> visit_sum;
  std::vector<Wide> visit_sq;

  explicit Tally(std::size_t sites) : visit_sum(sites, 0), visit_sq(sites, 0) {}

  void merge(const Tally &o) {
    absorbed += o.absorbed;
    censored += o.censored;
    steps += o.steps;
    steps_sq += o.steps_sq;
    for (const auto &[k, c] : o.absorbed_at)
      absorbed_at[k] += c;
    for (std::size_t i = 0; i < visit_sum.size(); ++i) {
      visit_sum[i] += o.visit_sum[i];
      visit_sq[i] += o.visit_sq[i];
    }
  }
};

void run_walks(const WalkModel &m, const SimulationOptions &opt,
               std::uint64_t begin, std::uint64_t end, Tally &tally) {
  const std::int64_t N = m.N();
  const std::int64_t lo = -opt.window * N;
  const std::int64_t hi = opt.window * N;
  std::vector<std::uint64_t> counts(tally.visit_sum.size(), 0);
  std::vector<std::size_t> touched;

  const double bf = m.p0(), bb = m.p0() + m.q0(), bh = bb + m.r0();
  const double f = m.p(), b = m.p() + m.q();

  for (std::uint64_t w = begin; w < end; ++w) {
    CounterStream rng(opt.seed, w);
    std::int64_t j = m.i0();
    std::uint64_t steps = 0;
    bool absorbed = false;

    auto arrive = [&](std::int64_t site) {
      if (site < lo || site > hi)
        return;
      const auto a = static_cast<std::size_t>(site - lo);
      if (counts[a]++ == 0)
        touched.push_back(a);
    };
    arrive(j);

    while (steps < opt.step_cap) {
      const double u = rng.uniform();
      if (j % N == 0) {
        if (u < bf)
          ++j;
        else if (u < bb)
          --j;
        else if (u >= bh) {
          absorbed = true;
          break;
        }
      } else {
        if (u < f)
          ++j;
        else if (u < b)
          --j;
      }
      ++steps;
      arrive(j);
    }

    if (absorbed) {
      ++tally.absorbed;
      tally.steps += steps;
      tally.steps_sq += static_cast<Wide>(steps) * steps;
      ++tally.absorbed_at[j / N];
    } else {
      ++tally.censored;
    }
    for (std::size_t a : touched) {
      const std::uint64_t c = counts[a];
      tally.visit_sum[a] += c;
      tally.visit_sq[a] += static_cast<Wide>(c) * c;
      counts[a] = 0;
    }
    touched.clear();
  }
}

Estimate estimate(long double sum, long double sum_sq, std::uint64_t n) {
  Estimate e;
  if (n == 0)
    return e;
  const long double mean = sum / n;
  e.mean = static_cast<double>(mean);
  if (n > 1) {
    long double var = (sum_sq - sum * mean) / (n - 1);
    if (var < 0)
      var = 0;
    e.stderr_ = static_cast<double>(std::sqrt(var / n));
  }
  return e;
}

} // namespace

EmpiricalStats simulate(const WalkModel &model, const SimulationOptions &opt,
                        Diagnostics *diag) {
  if (opt.walks == 0)
    throw std::invalid_argument("simulate: walks must be >= 1");
  if (opt.window < 0)
    throw std::invalid_argument("simulate: window must be >= 0");
  const auto sites = static_cast<std::size_t>(2 * opt.window * model.N() + 1);
  const unsigned workers = std::max(1u, opt.workers);

  std::vector<Tally> partial(workers, Tally(sites));
  {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = opt.walks / workers;
    const std::uint64_t extra = opt.walks % workers;
    std::uint64_t begin = 0;
    for (unsigned t = 0; t < workers; ++t) {
      const std::uint64_t end = begin + chunk + (t < extra ? 1 : 0);
      pool.emplace_back([&, t, begin, end] {
        run_walks(model, opt, begin, end, partial[t]);
      });
      begin = end;
    }
  }
  Tally total(sites);
  for (const Tally &t : partial)
    total.merge(t);

  EmpiricalStats st;
  st.walks = opt.walks;
  st.seed = opt.seed;
  st.step_cap = opt.step_cap;
  st.censored = total.censored;
  st.mean_steps = estimate(static_cast<long double>(total.steps),
                           static_cast<long double>(total.steps_sq),
                           total.absorbed);
  for (const auto &[k, c] : total.absorbed_at)
    st.absorption_hist[k] = estimate(static_cast<long double>(c),
                                     static_cast<long double>(c), opt.walks);
  const std::int64_t lo = -opt.window * model.N();
  for (std::size_t a = 0; a < sites; ++a)
    st.visit_means[lo + static_cast<std::int64_t>(a)] =
        estimate(static_cast<long double>(total.visit_sum[a]),
                 static_cast<long double>(total.visit_sq[a]), opt.walks);

  const double censored_fraction =
      static_cast<double>(st.censored) / static_cast<double>(opt.walks);
  if (censored_fraction > 1e-3) {
    st.excess_censoring = true;
    if (diag)
      diag->push_back({DiagnosticKind::ExcessCensoring, "simulate",
                       std::to_string(st.censored) + " of " +
                           std::to_string(opt.walks) +
                           " walks hit the step cap",
                       0.0, censored_fraction});
  }
  return st;
}

} // namespace mfbwalk::oracle
