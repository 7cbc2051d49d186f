#pragma once

#include "radarplace/config.hpp"
#include "radarplace/dynamics.hpp"
#include "radarplace/fim.hpp"
#include "radarplace/random.hpp"
#include "radarplace/sensing.hpp"
#include "radarplace/types.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace radarplace {

struct GaussianBelief {
  Vec mean;
  Mat cov;

  Eigen::Index dim() const { return mean.size(); }
};

/// Third-order spherical cubature points, one per column: mean +/- sqrt(d) L e_i.
struct SigmaSet {
  Mat points;  // d x 2d

  Eigen::Index size() const { return points.cols(); }
  double weight() const { return 1.0 / static_cast<double>(points.cols()); }
  Vec mean() const { return points.rowwise().mean(); }
  Vec target_state(Eigen::Index i) const { return points.col(i); }
};

/// Lower Cholesky factor. If cov is not numerically PD, retries with diagonal jitter
/// growing from 1e-12 to 1e-9 times trace/dim before giving up.
inline Mat covariance_factor(const Mat& cov) {
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::Index d = cov.rows();
  const double scale = std::max(cov.trace() / static_cast<double>(d), 0.0);
  for (double rel = 1e-12; rel <= 1e-9 * 1.0001; rel *= 10.0) {
    llt.compute(cov + rel * scale * Mat::Identity(d, d));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw std::runtime_error("covariance not positive semi-definite");
}

inline SigmaSet sigma_points(const GaussianBelief& b) {
  const Eigen::Index d = b.dim();
  const Mat L = covariance_factor(b.cov) * std::sqrt(static_cast<double>(d));
  SigmaSet s;
  s.points.resize(d, 2 * d);
  s.points.leftCols(d) = L.colwise() + b.mean;
  s.points.rightCols(d) = (-L).colwise() + b.mean;
  return s;
}

/// Weighted sample covariance of the points about their mean.
inline Mat scatter(const SigmaSet& s) {
  const Mat centered = s.points.colwise() - s.mean();
  return s.weight() * centered * centered.transpose();
}

/// Linear transition, so the cubature prediction reduces to the closed form.
inline GaussianBelief predict(const GaussianBelief& b, const TransitionModel& tm) {
  GaussianBelief out;
  out.mean = tm.A * b.mean;
  out.cov = symmetrized(tm.A * b.cov * tm.A.transpose() + tm.W);
  return out;
}

/// Additive-noise cubature measurement update for an arbitrary h(x) and noise covariance R.
template <class MeasFn>
GaussianBelief cubature_update(const GaussianBelief& b, const Vec& z, MeasFn&& h, const Mat& R) {
  const SigmaSet sig = sigma_points(b);
  const Eigen::Index n_pts = sig.size();
  const double w = sig.weight();
  Mat Z(z.size(), n_pts);
  for (Eigen::Index i = 0; i < n_pts; ++i) Z.col(i) = h(sig.points.col(i));
  const Vec z_hat = Z.rowwise().mean();
  const Mat Zc = Z.colwise() - z_hat;
  const Mat Xc = sig.points.colwise() - b.mean;
  const Mat Pzz = symmetrized(w * Zc * Zc.transpose() + R);
  const Mat Pxz = w * Xc * Zc.transpose();
  Eigen::LLT<Mat> llt(Pzz);
  if (llt.info() != Eigen::Success) throw std::runtime_error("innovation covariance singular");
  const Mat gain = llt.solve(Pxz.transpose()).transpose();
  GaussianBelief out;
  out.mean = b.mean + gain * (z - z_hat);
  out.cov = symmetrized(b.cov - gain * Pzz * gain.transpose());
  return out;
}

/// Range-measurement update. Noise variances are evaluated once, at the predicted mean.
inline GaussianBelief update(const GaussianBelief& b, const Vec& z, const RadarStack& radars,
                             const MeasurementModel& mm) {
  const Mat R = range_variances(mm, radars, b.mean).asDiagonal();
  return cubature_update(
      b, z, [&radars](const Vec& x) { return expected_ranges(radars, x); }, R);
}

/// Sigma sets for the K beliefs following b (each regenerated from the predicted belief).
inline std::vector<SigmaSet> propagate(const GaussianBelief& b, const TransitionModel& tm, int horizon) {
  if (horizon < 1) throw std::invalid_argument("propagate: horizon must be >= 1");
  std::vector<SigmaSet> sets;
  sets.reserve(static_cast<std::size_t>(horizon));
  GaussianBelief cur = b;
  for (int t = 0; t < horizon; ++t) {
    cur = predict(cur, tm);
    sets.push_back(sigma_points(cur));
  }
  return sets;
}

/// Equal-weight average over the sigma points of the velocity-embedded SFIM.
inline Mat expected_jd(const SigmaSet& sig, const RadarStack& radars, const MeasurementModel& mm) {
  const Eigen::Index dim = sig.points.rows();
  const Eigen::Index M = dim / kTargetDim;
  std::vector<Mat3> acc(static_cast<std::size_t>(M), Mat3::Zero());
  std::vector<Mat3> blocks;
  for (Eigen::Index i = 0; i < sig.size(); ++i) {
    sfim_blocks(sig.points.col(i), radars, mm, blocks);
    for (Eigen::Index m = 0; m < M; ++m) acc[m] += blocks[m];
  }
  Mat out = Mat::Zero(dim, dim);
  for (Eigen::Index m = 0; m < M; ++m) out.block<3, 3>(6 * m, 6 * m) = acc[m] * sig.weight();
  return out;
}

inline Mat prior_covariance(int num_targets, const FilterParams& fp) {
  Vec diag(kTargetDim * num_targets);
  for (int m = 0; m < num_targets; ++m) {
    diag.segment<3>(6 * m).setConstant(fp.prior_pos_std_m * fp.prior_pos_std_m);
    diag.segment<3>(6 * m + 3).setConstant(fp.prior_vel_std_mps * fp.prior_vel_std_mps);
  }
  return diag.asDiagonal();
}

/// Filter initialization: truth perturbed by the prior stds, covariance their squares.
inline GaussianBelief initial_belief(const TargetStack& truth, const FilterParams& fp, Rng& rng) {
  GaussianBelief b;
  const int M = static_cast<int>(num_targets(truth));
  b.cov = prior_covariance(M, fp);
  b.mean = truth + (b.cov.diagonal().cwiseSqrt().array() * standard_normal(truth.size(), rng).array()).matrix();
  return b;
}

}  // namespace radarplace
