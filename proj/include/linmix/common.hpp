#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace linmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Uniform draw in [0,1) built from the top 53 bits of the engine output.
// std::uniform_real_distribution is implementation-defined; trajectories must
// be reproducible from the seed alone, so the mapping is spelled out here.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Samples an index from a probability vector by inverse CDF on one uniform
// draw. Rounding at the tail falls back to the last index.
inline int sample_categorical(Rng& rng, const Vector& p) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace linmix
