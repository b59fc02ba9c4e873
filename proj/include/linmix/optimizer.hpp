#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "linmix/common.hpp"
#include "linmix/estimator.hpp"

namespace linmix {

// Optimistic parameter theta_plus maximizing the Euclidean norm over a
// confidence ellipsoid, the unit action x_plus aligned with it, and the
// attained value |theta_plus|.
struct OptimisticSolution {
  Vector theta_plus;
  Vector x_plus;
  double value = 0.0;
};

// Maximizes |theta| over {(theta-c)^T W (theta-c) <= b}. Substituting
// theta = c + W^{-1/2} sqrt(b) u reduces this to maximizing a convex
// quadratic over the unit sphere, which is attained on the boundary:
// with W = Q diag(w) Q^T (w ascending), alpha_i = sqrt(b/w_i), ct = Q^T c
// and g = alpha o ct, the stationarity conditions give
//   v_i = g_i / (mu - alpha_i^2),  sum_i g_i^2/(mu - alpha_i^2)^2 = 1,
// with multiplier mu >= alpha_max^2 at the maximizer. The secular equation is
// solved for sigma = mu - alpha_max^2 by bisection on (0, |g|]; working in
// sigma avoids cancellation against the pole. When c has no component on the
// leading eigenspace and the interior terms sum below 1 the multiplier sticks
// at the pole (hard case) and the leftover mass tau goes along the leading
// eigenvector, tie-broken to the first one with positive leading component.
inline OptimisticSolution solve_optimistic(const ConfidenceEllipsoid& ell) {
  const Eigen::Index d = ell.center.size();
  if (d < 1) throw std::invalid_argument("solve_optimistic: empty ellipsoid");
  if (ell.weight.rows() != d || ell.weight.cols() != d)
    throw std::invalid_argument("solve_optimistic: weight/center dimension mismatch");
  if (!(ell.radius > 0.0) || !std::isfinite(ell.radius))
    throw std::invalid_argument("solve_optimistic: radius must be positive and finite");
  const double scale_w = ell.weight.cwiseAbs().maxCoeff();
  if ((ell.weight - ell.weight.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + scale_w))
    throw std::invalid_argument("solve_optimistic: weight must be symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(ell.weight);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("solve_optimistic: eigendecomposition failed");
  const Vector w = es.eigenvalues();  // ascending
  const Matrix& Q = es.eigenvectors();
  if (!(w[0] > 0.0))
    throw std::invalid_argument("solve_optimistic: weight must be positive definite");

  Vector alpha(d), delta(d);
  for (Eigen::Index i = 0; i < d; ++i) alpha[i] = std::sqrt(ell.radius / w[i]);
  const double a2max = alpha[0] * alpha[0];
  // delta_i = alpha_max^2 - alpha_i^2 >= 0; zero exactly on the leading index.
  for (Eigen::Index i = 0; i < d; ++i) delta[i] = a2max - alpha[i] * alpha[i];

  const Vector ct = Q.transpose() * ell.center;
  Vector g(d);
  for (Eigen::Index i = 0; i < d; ++i) g[i] = alpha[i] * ct[i];

  // Leading eigenspace as a relative cluster of the smallest eigenvalue.
  std::vector<Eigen::Index> cluster;
  for (Eigen::Index i = 0; i < d; ++i)
    if (w[i] <= w[0] * (1.0 + 1e-10)) cluster.push_back(i);
  auto in_cluster = [&](Eigen::Index i) { return w[i] <= w[0] * (1.0 + 1e-10); };

  double g_cluster2 = 0.0, g_norm2 = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    g_norm2 += g[i] * g[i];
    if (in_cluster(i)) g_cluster2 += g[i] * g[i];
  }
  const double g_norm = std::sqrt(g_norm2);

  Vector v = Vector::Zero(d);
  const bool cluster_component = std::sqrt(g_cluster2) > 1e-13 * g_norm && g_norm > 0.0;

  double interior2 = 0.0;  // sum over non-cluster indices of (g_i/delta_i)^2
  if (!cluster_component) {
    for (Eigen::Index i = 0; i < d; ++i)
      if (!in_cluster(i)) {
        const double vi = g[i] / delta[i];
        interior2 += vi * vi;
      }
  }

  if (!cluster_component && interior2 < 1.0) {
    // Hard case: multiplier at the pole, residual mass on the leading space.
    for (Eigen::Index i = 0; i < d; ++i)
      if (!in_cluster(i)) v[i] = g[i] / delta[i];
    const double tau = std::sqrt(1.0 - interior2);
    const Eigen::Index lead = cluster.front();
    double sign = 1.0;
    for (Eigen::Index r = 0; r < d; ++r) {
      if (Q(r, lead) != 0.0) {
        sign = Q(r, lead) > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    v[lead] = sign * tau;
  } else {
    // Secular root in sigma: phi(sigma) = sum g_i^2/(sigma + delta_i)^2 is
    // decreasing with phi(0+) >= 1 >= phi(|g|), so bisection brackets it.
    auto phi = [&](double sigma) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double den = sigma + delta[i];
        const double term = g[i] / den;
        s += term * term;
      }
      return s;
    };
    double lo = 0.0, hi = g_norm;
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
      if (hi - lo <= 1e-12 * hi) {
        converged = true;
        break;
      }
      const double mid = 0.5 * (lo + hi);
      if (phi(mid) >= 1.0)
        lo = mid;
      else
        hi = mid;
    }
    if (!converged && hi - lo > 1e-12 * hi)
      throw std::runtime_error("solve_optimistic: secular bisection failed to converge");
    const double sigma = 0.5 * (lo + hi);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = g[i] / (sigma + delta[i]);
  }

  // Renormalizing v puts theta_plus on the boundary exactly up to rotation
  // roundoff: the quadratic form of Q (alpha o v) equals radius * |v|^2.
  const double vn = v.norm();
  if (vn > 0.0) v /= vn;

  OptimisticSolution sol;
  Vector z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = alpha[i] * v[i];
  sol.theta_plus = ell.center + Q * z;
  sol.value = sol.theta_plus.norm();
  if (sol.value > 0.0) {
    sol.x_plus = sol.theta_plus / sol.value;
  } else {
    // Only reachable if the boundary point lands exactly on the origin.
    sol.x_plus = Vector::Unit(d, 0);
  }
  return sol;
}

}  // namespace linmix
