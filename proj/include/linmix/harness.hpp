#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "linmix/common.hpp"
#include "linmix/policy.hpp"
#include "linmix/process.hpp"

namespace linmix {

enum class PolicyKind { LinMixFinite, LinMixInfinite, FixedOracle, EveryStepUcb };

inline std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::LinMixFinite: return "linmix_finite";
    case PolicyKind::LinMixInfinite: return "linmix_infinite";
    case PolicyKind::FixedOracle: return "fixed_oracle";
    case PolicyKind::EveryStepUcb: return "everystep_ucb";
  }
  throw std::invalid_argument("policy_name: unknown kind");
}

struct ExperimentConfig {
  ProcessSpec process;
  PolicyKind policy = PolicyKind::LinMixFinite;
  PolicyConfig policy_cfg;
  std::vector<std::int64_t> horizons;
  int replications = 1;
  std::uint64_t base_seed = 0;
  std::string output_path;  // prefix for <prefix>.csv / <prefix>.json
  int threads = 0;          // 0 = hardware concurrency
};

struct ReplicationResult {
  std::int64_t n = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  double regret = 0.0;
  bool coverage_fail = false;
};

struct HorizonStats {
  std::int64_t n = 0;
  int replications = 0;
  double mean_regret = 0.0;
  double se_regret = 0.0;
  double coverage_fail_rate = 0.0;
  // NaN where not applicable for the policy.
  double envelope = std::numeric_limits<double>::quiet_NaN();
  double envelope_summed_rounds = std::numeric_limits<double>::quiet_NaN();
  double envelope_theorem = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct RunResult {
  std::string policy;
  std::vector<ReplicationResult> rows;       // horizon-major, replication order
  std::vector<HorizonStats> per_horizon;
};

namespace detail {

// Shared accumulation shape for stationary means and one-step conditional
// means, so cases that should agree exactly agree bit-for-bit.
template <typename WeightAt>
Vector weighted_dictionary_sum(const std::vector<Vector>& dictionary, int states, int dim,
                               WeightAt&& weight_at) {
  Vector acc = Vector::Zero(dim);
  for (int i = 0; i < states; ++i) acc += weight_at(i) * dictionary[static_cast<std::size_t>(i)];
  return acc;
}

}  // namespace detail

// Stationary mean parameter sum_i pi_i D_i.
inline Vector theta_star(const ProcessSpec& spec) {
  spec.validate();
  const Vector pi = stationary_distribution(spec.transition);
  return detail::weighted_dictionary_sum(spec.dictionary, spec.states(), spec.dim(),
                                         [&](int i) { return pi[i]; });
}

// Smallest horizon the finite-horizon envelope is stated for:
// ceil(3 a gamma sqrt(lambda) / (2 sqrt(lambda) B + sqrt(2))).
inline std::int64_t regret_envelope_min_n(double lambda, double B, double a, double gamma) {
  if (!(lambda > 0.0) || !(B > 0.0) || !(a > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("regret_envelope_min_n: parameters must be > 0");
  const double value = 3.0 * a * gamma * std::sqrt(lambda) /
                       (2.0 * std::sqrt(lambda) * B + std::sqrt(2.0));
  return static_cast<std::int64_t>(std::ceil(value));
}

namespace detail {

inline double envelope_constant(double lambda, double B, double gamma) {
  const double s2l = std::sqrt(2.0 * lambda);
  return 12.0 * (s2l + 4.0 * s2l * B + 1.0) / (gamma * s2l);
}

}  // namespace detail

// Finite-horizon regret envelope
//   B * (1/n + C log(n) sqrt(2 d n log(n (1 + n/(lambda d))))),
//   C = 12 (sqrt(2 lambda) + 4 sqrt(2 lambda) B + 1) / (gamma sqrt(2 lambda)).
// Rejects horizons below the stated threshold.
inline double regret_envelope(std::int64_t n, int d, double lambda, double B, double a,
                              double gamma) {
  if (n < 1) throw std::invalid_argument("regret_envelope: n must be >= 1");
  if (d < 1) throw std::invalid_argument("regret_envelope: d must be >= 1");
  const std::int64_t min_n = regret_envelope_min_n(lambda, B, a, gamma);
  if (n < min_n)
    throw std::invalid_argument("regret_envelope: horizon " + std::to_string(n) +
                                " below stated threshold " + std::to_string(min_n));
  const double nd = static_cast<double>(n);
  const double C = detail::envelope_constant(lambda, B, gamma);
  return B * (1.0 / nd +
              C * std::log(nd) * std::sqrt(2.0 * d * nd * std::log(nd * (1.0 + nd / (lambda * d)))));
}

// Anytime-run reference bounds: the per-round finite envelopes summed over the
// executed doubling schedule, and the displayed anytime bound
//   2B (n_0 + C (log2(n+1) + 1) log(2(n+1)) sqrt((n+1) d log(2(n+1)(1 + 2(n+1)/(lambda d))))).
struct InfiniteEnvelope {
  double summed_rounds = 0.0;
  double theorem_bound = 0.0;
};

inline InfiniteEnvelope regret_envelope_infinite(std::int64_t total_n, int d, double lambda,
                                                 double B, double a, double gamma) {
  if (total_n < 1) throw std::invalid_argument("regret_envelope_infinite: n must be >= 1");
  if (d < 1) throw std::invalid_argument("regret_envelope_infinite: d must be >= 1");
  PolicyConfig cfg;
  cfg.lambda = lambda;
  cfg.B = B;
  cfg.a = a;
  cfg.gamma = gamma;
  const std::int64_t n0 = n_zero(cfg);

  InfiniteEnvelope env;
  std::int64_t done = 0;
  for (int round = 0; done < total_n; ++round) {
    const std::int64_t n_round = n0 << round;
    env.summed_rounds += regret_envelope(n_round, d, lambda, B, a, gamma);
    done += std::min(n_round, total_n - done);
  }

  const double n1 = static_cast<double>(total_n) + 1.0;
  const double C = detail::envelope_constant(lambda, B, gamma);
  const double inner = 2.0 * n1 * (1.0 + 2.0 * n1 / (lambda * d));
  env.theorem_bound =
      2.0 * B *
      (static_cast<double>(n0) + C * (std::log2(n1) + 1.0) * std::log(2.0 * n1) *
                                     std::sqrt(n1 * d * std::log(inner)));
  return env;
}

// One-step-greedy comparison: greedy_value = n sum_i pi_i |sum_j P(i,j) D_j|
// versus tilde_nu = n |theta_star|, with the mixing bound 2 n phi_1 B.
struct Prop1Report {
  double greedy_value = 0.0;
  double tilde_nu = 0.0;
  double gap = 0.0;    // greedy_value - tilde_nu, nonnegative by Jensen
  double phi1 = 0.0;
  double bound = 0.0;  // 2 n phi_1 B
  bool holds = false;
};

inline Prop1Report prop1_check(const ProcessSpec& spec, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("prop1_check: n must be >= 1");
  spec.validate();
  const int S = spec.states();
  const int d = spec.dim();
  for (int i = 0; i < S; ++i)
    for (int j = i + 1; j < S; ++j)
      if ((spec.dictionary[static_cast<std::size_t>(i)] -
           spec.dictionary[static_cast<std::size_t>(j)])
              .norm() <= 1e-12)
        throw std::invalid_argument("prop1_check: dictionary vectors must be distinct");

  const Vector pi = stationary_distribution(spec.transition);
  const Vector star = detail::weighted_dictionary_sum(spec.dictionary, S, d,
                                                      [&](int i) { return pi[i]; });
  const double nd = static_cast<double>(n);

  double greedy_step = 0.0;
  for (int i = 0; i < S; ++i) {
    const Vector cond = detail::weighted_dictionary_sum(spec.dictionary, S, d,
                                                        [&](int j) { return spec.transition(i, j); });
    greedy_step += pi[i] * cond.norm();
  }

  Prop1Report report;
  report.tilde_nu = nd * star.norm();
  report.greedy_value = nd * greedy_step;
  report.gap = report.greedy_value - report.tilde_nu;
  report.phi1 = phi_coefficient(spec.transition, pi, 1);
  report.bound = 2.0 * nd * report.phi1 * spec.bound_B;
  report.holds = report.gap <= report.bound;
  return report;
}

// Fraction of runs whose log contains at least one ellipsoid missing the true
// mean. Every trajectory must carry an ellipsoid log.
inline double coverage_report(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("coverage_report: no trajectories");
  std::int64_t failures = 0;
  for (const Trajectory& traj : trajectories) {
    if (traj.ellipsoids.empty())
      throw std::invalid_argument("coverage_report: trajectory has no ellipsoid log");
    if (traj.any_coverage_failure()) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(trajectories.size());
}

namespace detail {

inline ReplicationResult run_one_replication(const ExperimentConfig& cfg, std::int64_t n, int rep,
                                             const Vector& star, double nu_step) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
  Process env(cfg.process, seed);
  Trajectory traj;
  switch (cfg.policy) {
    case PolicyKind::LinMixFinite: traj = run_finite(env, n, cfg.policy_cfg); break;
    case PolicyKind::LinMixInfinite: traj = run_infinite(env, n, cfg.policy_cfg); break;
    case PolicyKind::FixedOracle: traj = run_fixed_oracle(env, n, star); break;
    case PolicyKind::EveryStepUcb: traj = run_everystep_ucb(env, n, cfg.policy_cfg); break;
  }
  ReplicationResult row;
  row.n = n;
  row.replication = rep;
  row.seed = seed;
  row.regret = static_cast<double>(n) * nu_step - traj.total_payoff();
  row.coverage_fail = !traj.ellipsoids.empty() && traj.any_coverage_failure();
  return row;
}

}  // namespace detail

// Runs replications r = 0..R-1 with seeds base_seed + r for every horizon.
// Replications are farmed out to a worker pool; rows come back in
// deterministic replication order regardless of scheduling.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.process.validate();
  if (cfg.horizons.empty()) throw std::invalid_argument("run_experiment: no horizons");
  for (std::int64_t n : cfg.horizons)
    if (n < 1) throw std::invalid_argument("run_experiment: horizons must be >= 1");
  if (cfg.replications < 1)
    throw std::invalid_argument("run_experiment: replications must be >= 1");

  const Vector star = theta_star(cfg.process);
  const double nu_step = star.norm();

  RunResult result;
  result.policy = policy_name(cfg.policy);

  for (std::int64_t n : cfg.horizons) {
    const auto t0 = std::chrono::steady_clock::now();
    const int reps = cfg.replications;
    std::vector<ReplicationResult> rows(static_cast<std::size_t>(reps));

    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      while (true) {
        const int rep = next.fetch_add(1);
        if (rep >= reps) return;
        try {
          rows[static_cast<std::size_t>(rep)] = detail::run_one_replication(cfg, n, rep, star, nu_step);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error)
            first_error = std::make_exception_ptr(std::runtime_error(
                "replication " + std::to_string(rep) + " (seed " +
                std::to_string(cfg.base_seed + static_cast<std::uint64_t>(rep)) + "): " + e.what()));
          return;
        }
      }
    };

    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min(nthreads, reps));
    if (nthreads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(nthreads));
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    HorizonStats stats;
    stats.n = n;
    stats.replications = reps;
    double sum = 0.0;
    int failures = 0;
    for (const ReplicationResult& row : rows) {
      sum += row.regret;
      failures += row.coverage_fail ? 1 : 0;
    }
    stats.mean_regret = sum / reps;
    if (reps >= 2) {
      double ss = 0.0;
      for (const ReplicationResult& row : rows) {
        const double dev = row.regret - stats.mean_regret;
        ss += dev * dev;
      }
      stats.se_regret = std::sqrt(ss / (reps - 1)) / std::sqrt(static_cast<double>(reps));
    }
    stats.coverage_fail_rate = static_cast<double>(failures) / reps;

    const PolicyConfig& pc = cfg.policy_cfg;
    if (cfg.policy == PolicyKind::LinMixFinite &&
        n >= regret_envelope_min_n(pc.lambda, pc.B, pc.a, pc.gamma)) {
      stats.envelope = regret_envelope(n, cfg.process.dim(), pc.lambda, pc.B, pc.a, pc.gamma);
    } else if (cfg.policy == PolicyKind::LinMixInfinite) {
      const InfiniteEnvelope env =
          regret_envelope_infinite(n, cfg.process.dim(), pc.lambda, pc.B, pc.a, pc.gamma);
      stats.envelope_summed_rounds = env.summed_rounds;
      stats.envelope_theorem = env.theorem_bound;
    }
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (ReplicationResult& row : rows) result.rows.push_back(row);
    result.per_horizon.push_back(stats);
  }
  return result;
}

}  // namespace linmix
