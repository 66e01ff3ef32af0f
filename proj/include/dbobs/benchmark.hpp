#pragma once

// Accuracy comparison of the subspace-iteration deadbeat gain against
// Ackermann's formula over random observable scalar-output pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dbobs/error.hpp"
#include "dbobs/format.hpp"
#include "dbobs/linear.hpp"

namespace dbobs {

struct BenchConfig {
  int n_min = 3;
  int n_max = 10;
  int trials = 10000;
  std::uint64_t seed = 0;
  std::string distribution = "standard-normal";

  void validate() const {
    if (n_min < 3 || n_max < n_min) throw InvalidInput("BenchConfig: need 3 <= n_min <= n_max");
    if (trials < 1) throw InvalidInput("BenchConfig: trials must be positive");
    if (distribution != "standard-normal") throw InvalidInput("BenchConfig: only standard-normal is supported");
  }
};

enum class Outcome { SubspaceWins, AckermannWins, Tie, Failure };

struct Comparison {
  Outcome outcome = Outcome::Failure;
  double residual_alg1 = 0.0;
  double residual_acker = 0.0;
};

struct BenchRow {
  int n = 0;
  int trials = 0;
  int wins = 0;
  int losses = 0;
  int ties = 0;
  int failures = 0;
  double win_rate = 0.0;  // wins / (wins + losses)
  double median_res_alg1 = 0.0;
  double median_res_acker = 0.0;
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchRow> rows;
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of trial `trial` at dimension n; independent of scheduling.
inline std::uint64_t trial_seed(std::uint64_t seed, int n, int trial) {
  return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(trial));
}

inline constexpr int kMaxRejections = 100;

/// A and C with i.i.d. standard normal entries, redrawn until the
/// observability matrix has full numerical rank.
template <class Rng>
LinearSystem random_observable_pair(int n, Rng& rng) {
  if (n < 1) throw InvalidInput("random_observable_pair: n must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Matrix a(n, n);
    Matrix c(1, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    for (int j = 0; j < n; ++j) c(0, j) = normal(rng);

    Matrix obs(n, n);
    Matrix row = c;
    for (int i = 0; i < n; ++i) {
      obs.row(i) = row;
      row = row * a;
    }
    Eigen::JacobiSVD<Matrix> svd(obs);
    if (detail::count_rank(svd.singularValues(), detail::default_rank_tol(n, n)) == n) return LinearSystem(a, c);
  }
  throw Error("random_observable_pair: " + std::to_string(kMaxRejections) + " consecutive unobservable draws");
}

inline Comparison compare_once(const LinearSystem& sys) {
  Comparison cmp;
  try {
    cmp.residual_alg1 = deadbeat_gain(sys).residual;
    cmp.residual_acker = ackermann_gain(sys).residual;
  } catch (const Error&) {
    cmp.outcome = Outcome::Failure;
    return cmp;
  }
  if (!std::isfinite(cmp.residual_alg1) || !std::isfinite(cmp.residual_acker)) {
    cmp.outcome = Outcome::Failure;
  } else if (cmp.residual_alg1 < cmp.residual_acker) {
    cmp.outcome = Outcome::SubspaceWins;
  } else if (cmp.residual_alg1 > cmp.residual_acker) {
    cmp.outcome = Outcome::AckermannWins;
  } else {
    cmp.outcome = Outcome::Tie;
  }
  return cmp;
}

/// One comparison on the pair drawn for (seed, n, trial).
inline Comparison run_trial(std::uint64_t seed, int n, int trial) {
  std::mt19937_64 rng(trial_seed(seed, n, trial));
  try {
    return compare_once(random_observable_pair(n, rng));
  } catch (const Error&) {
    return Comparison{};
  }
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

inline BenchRow aggregate(int n, const std::vector<Comparison>& results) {
  BenchRow row;
  row.n = n;
  row.trials = static_cast<int>(results.size());
  std::vector<double> r1;
  std::vector<double> r2;
  for (const auto& c : results) {
    switch (c.outcome) {
      case Outcome::SubspaceWins: ++row.wins; break;
      case Outcome::AckermannWins: ++row.losses; break;
      case Outcome::Tie: ++row.ties; break;
      case Outcome::Failure: ++row.failures; continue;
    }
    r1.push_back(c.residual_alg1);
    r2.push_back(c.residual_acker);
  }
  const int decided = row.wins + row.losses;
  row.win_rate = decided > 0 ? static_cast<double>(row.wins) / decided : 0.0;
  row.median_res_alg1 = median(std::move(r1));
  row.median_res_acker = median(std::move(r2));
  return row;
}

}  // namespace detail

/// Win rates per n. `workers` = 0 uses the hardware concurrency; the
/// report does not depend on it.
inline BenchReport run_benchmark(const BenchConfig& config, unsigned workers = 1) {
  config.validate();
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  BenchReport report;
  report.config = config;
  for (int n = config.n_min; n <= config.n_max; ++n) {
    std::vector<Comparison> results(static_cast<std::size_t>(config.trials));
    auto work = [&](unsigned w) {
      for (int t = static_cast<int>(w); t < config.trials; t += static_cast<int>(workers)) {
        results[static_cast<std::size_t>(t)] = run_trial(config.seed, n, t);
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& th : pool) th.join();
    }
    report.rows.push_back(detail::aggregate(n, results));
  }
  return report;
}

inline std::string bench_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "# distribution=" << report.config.distribution << " seed=" << report.config.seed
      << " norm=frobenius\n";
  out << "n,trials,wins,losses,ties,failures,win_rate,median_res_alg1,median_res_acker\n";
  for (const auto& r : report.rows) {
    out << r.n << ',' << r.trials << ',' << r.wins << ',' << r.losses << ',' << r.ties << ',' << r.failures << ','
        << format_double(r.win_rate) << ',' << format_double(r.median_res_alg1) << ','
        << format_double(r.median_res_acker) << '\n';
  }
  return out.str();
}

/// Two-row table: dimensions on top, win percentages below.
inline std::string bench_table(const BenchReport& report) {
  std::ostringstream head;
  std::ostringstream body;
  head << '|';
  body << '|';
  for (const auto& r : report.rows) {
    char cell[32];
    std::snprintf(cell, sizeof cell, " n=%-3d |", r.n);
    head << cell;
    std::snprintf(cell, sizeof cell, " %%%-4.0f |", 100.0 * r.win_rate);
    body << cell;
  }
  const std::string rule(head.str().size(), '-');
  std::ostringstream out;
  out << "Percentage of trials where the subspace-iteration gain beat Ackermann ("
      << report.config.trials << " trials per n, " << report.config.distribution << ")\n";
  out << rule << '\n' << head.str() << '\n' << rule << '\n' << body.str() << '\n' << rule << '\n';
  return out.str();
}

}  // namespace dbobs
