#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "linmix/common.hpp"
#include "linmix/estimator.hpp"
#include "linmix/optimizer.hpp"
#include "linmix/process.hpp"

namespace linmix {

struct PolicyConfig {
  double lambda = 1.0;
  double a = 1.0;
  double gamma = 1.0;
  double B = 1.0;
  std::optional<double> delta;  // failure probability; defaults to 1/n at run time
  std::optional<Vector> x0;     // first block's action; defaults to e_1
};

struct StepRecord {
  std::int64_t t = 0;  // absolute step, 1-based
  int round = 0;       // doubling round (0 for finite runs)
  std::int64_t m = 0;  // block index within the round
  std::int64_t ell = 0;  // position within the block, 1-based
};

struct BlockRecord {
  int round = 0;
  std::int64_t m = 0;
  Vector center;
  Matrix weight;
  double radius = 0.0;
  std::int64_t sample_count = 0;     // observations inside this ellipsoid
  std::int64_t newest_sample_t = 0;  // absolute step of the newest one
  bool covers_true_mean = false;
};

struct RoundRecord {
  int round = 0;
  std::int64_t horizon = 0;       // nominal horizon the round was tuned for
  std::int64_t block_length = 0;
  double delta = 0.0;
  double radius = 0.0;
  std::int64_t start_t = 0;  // absolute step of the round's first play
  std::int64_t steps = 0;    // steps actually played
};

struct Trajectory {
  Matrix actions;  // d x T, one column per step
  Vector payoffs;  // T
  std::int64_t block_length = 0;  // k of the (first) round; 0 for oracle runs
  std::vector<StepRecord> steps;
  std::vector<BlockRecord> ellipsoids;
  std::vector<RoundRecord> schedule;

  std::int64_t length() const { return payoffs.size(); }
  double total_payoff() const { return payoffs.sum(); }
  bool any_coverage_failure() const {
    for (const BlockRecord& blk : ellipsoids)
      if (!blk.covers_true_mean) return true;
    return false;
  }
};

// First-round horizon of the doubling schedule:
// n_0 = max{1, ceil(3 a gamma sqrt(lambda) / (2 sqrt(lambda) B + sqrt(2)))}.
inline std::int64_t n_zero(const PolicyConfig& cfg) {
  if (!(cfg.a > 0.0) || !(cfg.gamma > 0.0) || !(cfg.lambda > 0.0) || !(cfg.B > 0.0))
    throw std::invalid_argument("n_zero: a, gamma, lambda, B must be > 0");
  const double value = 3.0 * cfg.a * cfg.gamma * std::sqrt(cfg.lambda) /
                       (2.0 * std::sqrt(cfg.lambda) * cfg.B + std::sqrt(2.0));
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(value)));
}

namespace detail {

inline void validate_policy(const PolicyConfig& cfg, int d) {
  if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
    throw std::invalid_argument("policy config: lambda must be > 0");
  if (!(cfg.a > 0.0) || !std::isfinite(cfg.a))
    throw std::invalid_argument("policy config: a must be > 0");
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma))
    throw std::invalid_argument("policy config: gamma must be > 0");
  if (!(cfg.B > 0.0) || !std::isfinite(cfg.B))
    throw std::invalid_argument("policy config: B must be > 0");
  if (cfg.delta && !(*cfg.delta > 0.0 && *cfg.delta < 1.0))
    throw std::invalid_argument("policy config: delta must lie in (0,1)");
  if (cfg.x0) {
    if (cfg.x0->size() != d) throw std::invalid_argument("policy config: x0 dimension mismatch");
    if (std::abs(cfg.x0->norm() - 1.0) > 1e-9)
      throw std::invalid_argument("policy config: x0 must be a unit vector");
  }
}

// Default failure probability 1/n, nudged into (0,1) for the n = 1 edge.
inline double default_delta(std::int64_t n) {
  const double delta = 1.0 / static_cast<double>(n);
  return delta < 1.0 ? delta : std::nextafter(1.0, 0.0);
}

// Plays one blocked round tuned for nominal horizon n_nominal, for n_play
// actual steps, appending to traj. Block m plays x0 (m = 0) or the optimistic
// action from C_{m-1}; only the first step of each block feeds the estimator.
// C_m is built from the samples of blocks 0..max{0, m-1}: block m's own first
// sample enters the pending slot and is absorbed when C_{m+1} is built, so
// C_0 and C_1 both contain exactly the first sample. Every absorbed sample is
// therefore at least k steps older than any step it influences.
inline void run_blocked(Process& env, std::int64_t n_nominal, std::int64_t n_play,
                        std::int64_t k_override, const PolicyConfig& cfg, int round,
                        const Vector& theta_star, Trajectory& traj) {
  const int d = env.dim();
  const std::int64_t k =
      k_override > 0 ? k_override : block_length(n_nominal, d, cfg.lambda, cfg.B, cfg.a, cfg.gamma);
  const double delta = cfg.delta ? *cfg.delta : default_delta(n_nominal);
  const double b = confidence_radius(n_nominal, k, d, cfg.lambda, cfg.B, delta);
  const Vector x0 = cfg.x0 ? *cfg.x0 : Vector::Unit(d, 0);

  const std::int64_t t_offset = static_cast<std::int64_t>(traj.steps.size());
  traj.schedule.push_back({round, n_nominal, k, delta, b, t_offset + 1, n_play});

  RlsState rls(d, cfg.lambda);
  ConfidenceEllipsoid last_ell;
  bool have_pending = false;
  Vector pending_x;
  double pending_y = 0.0;
  std::int64_t pending_t = 0;
  std::int64_t newest_t = 0;

  Vector action = x0;
  std::int64_t played = 0;
  for (std::int64_t m = 0; played < n_play; ++m) {
    if (m >= 1) action = solve_optimistic(last_ell).x_plus;
    for (std::int64_t pos = 1; pos <= k && played < n_play; ++pos) {
      const int s = env.step_index();
      const double y = env.dictionary(s).dot(action);
      ++played;
      const std::int64_t t_abs = t_offset + played;
      traj.actions.col(t_abs - 1) = action;
      traj.payoffs[t_abs - 1] = y;
      traj.steps.push_back({t_abs, round, m, pos});
      if (pos == 1) {
        if (m == 0) {
          absorb(rls, action, y);
          newest_t = t_abs;
        } else if (have_pending) {
          absorb(rls, pending_x, pending_y);
          newest_t = pending_t;
          have_pending = false;
        }
        last_ell = build_ellipsoid(rls, b, cfg.B);
        BlockRecord blk;
        blk.round = round;
        blk.m = m;
        blk.center = last_ell.center;
        blk.weight = last_ell.weight;
        blk.radius = b;
        blk.sample_count = rls.count;
        blk.newest_sample_t = newest_t;
        blk.covers_true_mean = last_ell.contains(theta_star);
        traj.ellipsoids.push_back(std::move(blk));
        if (m >= 1) {
          pending_x = action;
          pending_y = y;
          pending_t = t_abs;
          have_pending = true;
        }
      }
    }
  }
}

inline Trajectory make_trajectory(int d, std::int64_t n) {
  Trajectory traj;
  traj.actions = Matrix(d, n);
  traj.payoffs = Vector(n);
  traj.steps.reserve(static_cast<std::size_t>(n));
  return traj;
}

}  // namespace detail

// Finite-horizon run tuned for exactly n steps.
inline Trajectory run_finite(Process& env, std::int64_t n, const PolicyConfig& cfg) {
  if (n < 1) throw std::invalid_argument("run_finite: n must be >= 1");
  detail::validate_policy(cfg, env.dim());
  Trajectory traj = detail::make_trajectory(env.dim(), n);
  detail::run_blocked(env, n, n, 0, cfg, 0, env.mean(), traj);
  traj.block_length = traj.schedule.front().block_length;
  return traj;
}

// Ablation baseline: the same code path with the block length forced to 1,
// so every step is absorbed and the ellipsoid refreshes each step.
inline Trajectory run_everystep_ucb(Process& env, std::int64_t n, const PolicyConfig& cfg) {
  if (n < 1) throw std::invalid_argument("run_everystep_ucb: n must be >= 1");
  detail::validate_policy(cfg, env.dim());
  Trajectory traj = detail::make_trajectory(env.dim(), n);
  detail::run_blocked(env, n, n, 1, cfg, 0, env.mean(), traj);
  traj.block_length = traj.schedule.front().block_length;
  return traj;
}

// Anytime variant: doubling rounds with horizons n_i = 2^i n_0, each round a
// fresh finite run (new estimator, k and radius retuned, delta defaulting to
// 1/n_i), truncated once total_n steps have been played.
inline Trajectory run_infinite(Process& env, std::int64_t total_n, const PolicyConfig& cfg) {
  if (total_n < 1) throw std::invalid_argument("run_infinite: total_n must be >= 1");
  detail::validate_policy(cfg, env.dim());
  Trajectory traj = detail::make_trajectory(env.dim(), total_n);
  const Vector theta_star = env.mean();
  const std::int64_t n0 = n_zero(cfg);
  std::int64_t done = 0;
  for (int round = 0; done < total_n; ++round) {
    if (round >= 62 || n0 > (std::numeric_limits<std::int64_t>::max() >> round))
      throw std::runtime_error("run_infinite: round horizon overflow");
    const std::int64_t n_round = n0 << round;
    const std::int64_t n_play = std::min(n_round, total_n - done);
    detail::run_blocked(env, n_round, n_play, 0, cfg, round, theta_star, traj);
    done += n_play;
  }
  traj.block_length = traj.schedule.front().block_length;
  return traj;
}

// Clairvoyant baseline: plays the fixed unit action aligned with theta_star
// every step. No estimator, no ellipsoids.
inline Trajectory run_fixed_oracle(Process& env, std::int64_t n, const Vector& theta_star) {
  if (n < 1) throw std::invalid_argument("run_fixed_oracle: n must be >= 1");
  if (theta_star.size() != env.dim())
    throw std::invalid_argument("run_fixed_oracle: theta_star dimension mismatch");
  const int d = env.dim();
  const double norm = theta_star.norm();
  const Vector action = norm > 0.0 ? Vector(theta_star / norm) : Vector::Unit(d, 0);
  Trajectory traj = detail::make_trajectory(d, n);
  for (std::int64_t t = 1; t <= n; ++t) {
    const int s = env.step_index();
    traj.actions.col(t - 1) = action;
    traj.payoffs[t - 1] = env.dictionary(s).dot(action);
    traj.steps.push_back({t, 0, 0, t});
  }
  return traj;
}

}  // namespace linmix
