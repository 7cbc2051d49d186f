#pragma once

#include "radarplace/radarplace.hpp"

#include <random>

namespace rp_test {

using radarplace::Mat;
using radarplace::Vec;

inline double rel_frobenius(const Mat& a, const Mat& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline Mat random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

/// Well-conditioned SPD matrix: B B^T / d + shift I.
inline Mat random_spd(Eigen::Index d, std::mt19937_64& rng, double shift = 0.5) {
  const Mat b = random_matrix(d, d, rng);
  return b * b.transpose() / static_cast<double>(d) + shift * Mat::Identity(d, d);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// The three shipped scenario initial-state matrices.
inline Mat scenario_3r4t() {
  Mat m(4, 6);
  m << 0, 0, 55, 20, 10, 0, 15.4, 15.32, 70, 15, 20, 0, 10, 10, 55, 17, 19, 0, 20, 20, 45, 6, 8, 0;
  return m;
}

inline Mat scenario_6r3t() {
  Mat m(3, 6);
  m << 0, 0, 70, 25, 20, 0, -100.4, -30.32, 45, 20, -10, 0, 30, 30, 80, -10, -10, 0;
  return m;
}

}  // namespace rp_test
