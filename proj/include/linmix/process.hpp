#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "linmix/common.hpp"

namespace linmix {

enum class ProcessKind { MarkovDictionary, IidDictionary };

// Finite-dictionary parameter process: a Markov chain s_t on {0..S-1} with
// row-stochastic transition matrix, emitting theta_t = dictionary[s_t].
// IidDictionary is the special case where every row equals the marginal law.
struct ProcessSpec {
  ProcessKind kind = ProcessKind::MarkovDictionary;
  Matrix transition;               // S x S, rows sum to 1
  std::vector<Vector> dictionary;  // S vectors in R^d, norms <= bound_B
  double bound_B = 1.0;

  int states() const { return static_cast<int>(dictionary.size()); }
  int dim() const { return dictionary.empty() ? 0 : static_cast<int>(dictionary.front().size()); }

  void validate() const;
};

namespace detail {

// Strong connectivity of the positive-entry digraph, by BFS in both
// orientations from node 0. Exact: any positive entry is an edge.
inline bool strongly_connected(const Matrix& P) {
  const int S = static_cast<int>(P.rows());
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(S, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < S; ++v) {
        const double w = forward ? P(u, v) : P(v, u);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == S;
  };
  return reaches_all(true) && reaches_all(false);
}

// Period of a strongly connected digraph: gcd over all edges (u,v) of
// dist(u) + 1 - dist(v), with BFS distances from node 0.
inline int graph_period(const Matrix& P) {
  const int S = static_cast<int>(P.rows());
  std::vector<int> dist(S, -1);
  std::vector<int> queue{0};
  dist[0] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v = 0; v < S; ++v) {
      if (P(u, v) > 0.0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  int g = 0;
  for (int u = 0; u < S; ++u)
    for (int v = 0; v < S; ++v)
      if (P(u, v) > 0.0) g = std::gcd(g, dist[u] + 1 - dist[v]);
  return std::abs(g);
}

}  // namespace detail

inline void ProcessSpec::validate() const {
  const int S = states();
  if (S < 1) throw std::invalid_argument("process spec: empty dictionary");
  if (transition.rows() != S || transition.cols() != S)
    throw std::invalid_argument("process spec: transition must be " + std::to_string(S) + "x" +
                                std::to_string(S));
  for (int i = 0; i < S; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < S; ++j) {
      const double p = transition(i, j);
      if (!std::isfinite(p) || p < 0.0)
        throw std::invalid_argument("process spec: transition entries must be finite and >= 0");
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-12)
      throw std::invalid_argument("process spec: row " + std::to_string(i) +
                                  " of transition sums to " + std::to_string(row_sum));
  }
  if (!(bound_B > 0.0) || !std::isfinite(bound_B))
    throw std::invalid_argument("process spec: bound_B must be positive and finite");
  const int d = dim();
  if (d < 1) throw std::invalid_argument("process spec: dictionary vectors must have dim >= 1");
  for (const Vector& v : dictionary) {
    if (v.size() != d)
      throw std::invalid_argument("process spec: dictionary vectors must share one dimension");
    if (!v.allFinite()) throw std::invalid_argument("process spec: dictionary entries must be finite");
    if (v.norm() > bound_B * (1.0 + 1e-12))
      throw std::invalid_argument("process spec: dictionary vector exceeds bound_B in norm");
  }
  if (!detail::strongly_connected(transition))
    throw std::invalid_argument("process spec: transition chain is reducible");
  if (detail::graph_period(transition) != 1)
    throw std::invalid_argument("process spec: transition chain is periodic");
  if (kind == ProcessKind::IidDictionary) {
    for (int i = 1; i < S; ++i)
      if ((transition.row(i) - transition.row(0)).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("process spec: iid kind requires identical transition rows");
  }
}

// Unique stationary vector of a validated chain: solves pi^T P = pi^T with the
// normalization sum(pi) = 1 substituted for the last (redundant) equation.
inline Vector stationary_distribution(const Matrix& P) {
  const int S = static_cast<int>(P.rows());
  Matrix A = P.transpose() - Matrix::Identity(S, S);
  A.row(S - 1).setOnes();
  Vector rhs = Vector::Zero(S);
  rhs[S - 1] = 1.0;
  Vector pi = A.partialPivLu().solve(rhs);
  for (int i = 0; i < S; ++i) {
    if (pi[i] < -1e-12)
      throw std::runtime_error("stationary solve produced negative mass");
    if (pi[i] < 0.0) pi[i] = 0.0;
  }
  const double s = pi.sum();
  if (std::abs(s - 1.0) > 1e-10)
    throw std::runtime_error("stationary solve failed to normalize");
  return pi / s;
}

// P^m by repeated squaring; m = 0 gives the identity.
inline Matrix matrix_power(const Matrix& P, int m) {
  if (m < 0) throw std::invalid_argument("matrix_power: negative exponent");
  Matrix result = Matrix::Identity(P.rows(), P.cols());
  Matrix base = P;
  while (m > 0) {
    if (m & 1) result = result * base;
    base = base * base;
    m >>= 1;
  }
  return result;
}

// phi-mixing coefficient at lag m for the stationary chain: the sup over past
// events U and future events V of |P(V) - P(V | U)| is attained on atoms of
// the past and equals the worst-row total variation of the m-step kernel,
//   phi_m = max_i TV(P^m(i,.), pi) = max_i (1/2) sum_j |P^m(i,j) - pi_j|.
inline double phi_coefficient(const Matrix& P, const Vector& pi, int m) {
  if (m < 1) throw std::invalid_argument("phi_coefficient: lag must be >= 1");
  const Matrix Pm = matrix_power(P, m);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double tv = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) tv += std::abs(Pm(i, j) - pi[j]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

// Mixing coefficients phi_1..phi_M together with an exponential envelope
// a * exp(-gamma * m) that dominates them pointwise.
struct MixingProfile {
  std::vector<double> phi;  // phi[i] is the coefficient at lag i+1
  double a = 0.0;
  double gamma = 1.0;

  bool envelope_dominates() const {
    for (std::size_t i = 0; i < phi.size(); ++i)
      if (phi[i] > a * std::exp(-gamma * static_cast<double>(i + 1))) return false;
    return true;
  }
};

// Fits a, gamma by least squares on (m, log phi_m) over the positive entries,
// then inflates a until the envelope dominates every entry in double
// arithmetic. Edge cases: all-zero input returns the sentinel (DBL_MIN, 1);
// a single positive entry or a non-decaying fit pins gamma (1 resp. 1e-12)
// and lets the inflation step pick a.
inline MixingProfile fit_envelope(const std::vector<double>& phi_values) {
  if (phi_values.empty()) throw std::invalid_argument("fit_envelope: empty input");
  for (std::size_t i = 0; i < phi_values.size(); ++i) {
    const double p = phi_values[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0 + 1e-12)
      throw std::invalid_argument("fit_envelope: coefficients must lie in [0,1]");
    if (i > 0 && p > phi_values[i - 1] + 1e-12)
      throw std::invalid_argument("fit_envelope: coefficients must be nonincreasing");
  }

  MixingProfile profile;
  profile.phi = phi_values;

  std::vector<double> ms, logs;
  for (std::size_t i = 0; i < phi_values.size(); ++i) {
    if (phi_values[i] > 0.0) {
      ms.push_back(static_cast<double>(i + 1));
      logs.push_back(std::log(phi_values[i]));
    }
  }

  if (ms.empty()) {
    profile.a = std::numeric_limits<double>::min();
    profile.gamma = 1.0;
    return profile;
  }

  if (ms.size() == 1) {
    profile.gamma = 1.0;
    profile.a = phi_values[static_cast<std::size_t>(ms[0]) - 1] * std::exp(profile.gamma * ms[0]);
  } else {
    const double n = static_cast<double>(ms.size());
    const double mean_m = std::accumulate(ms.begin(), ms.end(), 0.0) / n;
    const double mean_l = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      sxx += (ms[i] - mean_m) * (ms[i] - mean_m);
      sxy += (ms[i] - mean_m) * (logs[i] - mean_l);
    }
    const double slope = sxy / sxx;
    profile.gamma = std::max(-slope, 1e-12);
    profile.a = std::exp(mean_l + profile.gamma * mean_m);
  }

  double ratio = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i)
    ratio = std::max(ratio, std::exp(logs[i] + profile.gamma * ms[i]) / profile.a);
  if (ratio > 1.0) profile.a *= ratio;
  while (!profile.envelope_dominates()) profile.a *= 1.0 + 1e-12;
  return profile;
}

// Convenience: compute phi_1..phi_max_lag for a spec's chain and fit the
// envelope in one call.
inline MixingProfile fit_envelope_from_chain(const Matrix& P, const Vector& pi, int max_lag) {
  if (max_lag < 1) throw std::invalid_argument("fit_envelope_from_chain: max_lag must be >= 1");
  std::vector<double> phis(static_cast<std::size_t>(max_lag));
  for (int m = 1; m <= max_lag; ++m) phis[static_cast<std::size_t>(m - 1)] = phi_coefficient(P, pi, m);
  return fit_envelope(phis);
}

// Sampling state for a spec: the chain position plus its RNG. The first state
// is drawn from the stationary law, so the emitted sequence is stationary.
class Process {
 public:
  Process(ProcessSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)) {
    spec_.validate();
    pi_ = stationary_distribution(spec_.transition);
    reset(seed);
  }

  const ProcessSpec& spec() const { return spec_; }
  const Vector& pi() const { return pi_; }
  int dim() const { return spec_.dim(); }
  int states() const { return spec_.states(); }
  int current_state() const { return state_; }
  std::int64_t steps_taken() const { return t_; }

  // Stationary mean sum_i pi_i D_i, accumulated in index order.
  Vector mean() const {
    Vector m = Vector::Zero(dim());
    for (int i = 0; i < states(); ++i) m += pi_[i] * spec_.dictionary[static_cast<std::size_t>(i)];
    return m;
  }

  void reset(std::uint64_t seed) {
    rng_.seed(seed);
    state_ = sample_categorical(rng_, pi_);
    t_ = 0;
  }

  // Emits the current state index and advances the chain one step. Inverse
  // CDF against the transition row, matching sample_categorical draw-for-draw.
  int step_index() {
    const int s = state_;
    const double u = uniform01(rng_);
    double acc = 0.0;
    int next = states() - 1;
    for (int j = 0; j < states(); ++j) {
      acc += spec_.transition(s, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    state_ = next;
    ++t_;
    return s;
  }

  // Emits theta_t = dictionary[s_t] and advances the chain.
  Vector sample_theta() { return spec_.dictionary[static_cast<std::size_t>(step_index())]; }

  const Vector& dictionary(int s) const { return spec_.dictionary[static_cast<std::size_t>(s)]; }

 private:
  ProcessSpec spec_;
  Vector pi_;
  Rng rng_;
  int state_ = 0;
  std::int64_t t_ = 0;
};

}  // namespace linmix
