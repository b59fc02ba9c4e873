#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "linmix/common.hpp"

namespace linmix {

// Block length for horizon n under the exponential mixing envelope
// a*exp(-gamma*m): the smallest spacing that makes the blocked subsample
// behave like an independent one at the target confidence scale,
//   k = max{1, ceil((1/gamma) * log(6 a gamma n^2 / D))},
//   D = 1 + 4 sqrt(n) B + sqrt(8 d n log(n (1 + n/(lambda d))) / lambda).
inline std::int64_t block_length(std::int64_t n, int d, double lambda, double B, double a,
                                 double gamma) {
  if (n < 1) throw std::invalid_argument("block_length: n must be >= 1");
  if (d < 1) throw std::invalid_argument("block_length: d must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("block_length: lambda must be > 0");
  if (!(B > 0.0)) throw std::invalid_argument("block_length: B must be > 0");
  if (!(a > 0.0)) throw std::invalid_argument("block_length: a must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("block_length: gamma must be > 0");
  const double nd = static_cast<double>(n);
  const double numerator = 6.0 * a * gamma * nd * nd;
  const double denominator =
      1.0 + 4.0 * std::sqrt(nd) * B +
      std::sqrt(8.0 * d * nd * std::log(nd * (1.0 + nd / (lambda * d))) / lambda);
  const double value = std::log(numerator / denominator) / gamma;
  if (!std::isfinite(value) || value < 1.0) return 1;
  return static_cast<std::int64_t>(std::ceil(value));
}

// Squared confidence radius b for the blocked estimator at horizon n with
// block length k and failure probability delta:
//   sqrt(b) = 2 sqrt(lambda) B + sqrt(2 log(1/delta) + d log(1 + n/(k lambda d))).
inline double confidence_radius(std::int64_t n, std::int64_t k, int d, double lambda, double B,
                                double delta) {
  if (n < 1) throw std::invalid_argument("confidence_radius: n must be >= 1");
  if (k < 1) throw std::invalid_argument("confidence_radius: k must be >= 1");
  if (d < 1) throw std::invalid_argument("confidence_radius: d must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("confidence_radius: lambda must be > 0");
  if (!(B > 0.0)) throw std::invalid_argument("confidence_radius: B must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("confidence_radius: delta must lie in (0,1)");
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double root = 2.0 * std::sqrt(lambda) * B +
                      std::sqrt(2.0 * std::log(1.0 / delta) +
                                d * std::log(1.0 + nd / (kd * lambda * d)));
  return root * root;
}

// Regularized least squares accumulator: V = sum x x^T, u = sum y x.
struct RlsState {
  int d = 0;
  double lambda = 1.0;
  Matrix V;
  Vector u;
  std::int64_t count = 0;

  RlsState(int dim, double lambda_reg) : d(dim), lambda(lambda_reg) {
    if (dim < 1) throw std::invalid_argument("RlsState: dim must be >= 1");
    if (!(lambda_reg > 0.0)) throw std::invalid_argument("RlsState: lambda must be > 0");
    V = Matrix::Zero(dim, dim);
    u = Vector::Zero(dim);
  }

  Matrix regularized_gram() const { return lambda * Matrix::Identity(d, d) + V; }
};

// Absorbs one observation (x, y) with a unit-ball action x.
inline void absorb(RlsState& state, const Vector& x, double y) {
  if (x.size() != state.d) throw std::invalid_argument("absorb: dimension mismatch");
  if (!x.allFinite() || !std::isfinite(y)) throw std::invalid_argument("absorb: non-finite input");
  if (x.norm() > 1.0 + 1e-9) throw std::invalid_argument("absorb: action norm exceeds 1");
  state.V.noalias() += x * x.transpose();
  state.u.noalias() += y * x;
  ++state.count;
}

// Solves (lambda I + V) theta = u by Cholesky with one step of iterative
// refinement; the residual must come out below 1e-10 * (1 + |u|).
inline Vector estimate(const RlsState& state) {
  const Matrix A = state.regularized_gram();
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("estimate: Cholesky factorization failed (count=" +
                             std::to_string(state.count) + ")");
  Vector theta = llt.solve(state.u);
  theta += llt.solve(state.u - A * theta);
  const double residual = (A * theta - state.u).norm();
  if (!(residual <= 1e-10 * (1.0 + state.u.norm())))
    throw std::runtime_error("estimate: residual " + std::to_string(residual) +
                             " exceeds tolerance");
  return theta;
}

// Ellipsoid {theta : (theta - center)^T weight (theta - center) <= radius}.
struct ConfidenceEllipsoid {
  Vector center;
  Matrix weight;   // zeta^2 (lambda I + V), zeta = 2B
  double radius = 0.0;

  double quadratic_form(const Vector& theta) const {
    const Vector delta = theta - center;
    return delta.dot(weight * delta);
  }

  bool contains(const Vector& theta) const { return quadratic_form(theta) <= radius; }
};

inline ConfidenceEllipsoid build_ellipsoid(const RlsState& state, double b, double B) {
  if (!(b > 0.0) || !std::isfinite(b))
    throw std::invalid_argument("build_ellipsoid: radius must be positive and finite");
  if (!(B > 0.0)) throw std::invalid_argument("build_ellipsoid: B must be > 0");
  const double zeta = 2.0 * B;
  ConfidenceEllipsoid ell;
  ell.center = estimate(state);
  ell.weight = (zeta * zeta) * state.regularized_gram();
  ell.radius = b;
  return ell;
}

}  // namespace linmix
