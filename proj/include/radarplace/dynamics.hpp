#pragma once

#include "radarplace/config.hpp"
#include "radarplace/random.hpp"
#include "radarplace/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace radarplace {

/// Constant-velocity transition for M stacked targets: x' = A x + w, w ~ N(0, W).
struct TransitionModel {
  Mat6 A_single;
  Mat6 W_single;
  Mat A;  // I_M kron A_single
  Mat W;  // I_M kron W_single
  int num_targets = 0;
};

inline Mat kron_identity(int m, const Mat6& block) {
  Mat out = Mat::Zero(6 * m, 6 * m);
  for (int i = 0; i < m; ++i) out.block<6, 6>(6 * i, 6 * i) = block;
  return out;
}

inline TransitionModel build_transition(double dt, double sigma_w, int num_targets) {
  TransitionModel tm;
  tm.num_targets = num_targets;
  tm.A_single.setIdentity();
  tm.A_single.topRightCorner<3, 3>() = dt * Mat3::Identity();

  const double s2 = sigma_w * sigma_w;
  const double pp = 0.25 * dt * dt * dt * dt * s2;
  const double pv = 0.5 * dt * dt * dt * s2;
  const double vv = dt * dt * s2;
  tm.W_single.setZero();
  tm.W_single.topLeftCorner<3, 3>() = pp * Mat3::Identity();
  tm.W_single.topRightCorner<3, 3>() = pv * Mat3::Identity();
  tm.W_single.bottomLeftCorner<3, 3>() = pv * Mat3::Identity();
  tm.W_single.bottomRightCorner<3, 3>() = vv * Mat3::Identity();

  tm.A = kron_identity(num_targets, tm.A_single);
  tm.W = kron_identity(num_targets, tm.W_single);
  return tm;
}

/// F with F F^T = S for symmetric PSD S. Cholesky when S is positive definite,
/// otherwise pivoted LDL^T with negative pivots clamped to zero (rank-deficient S,
/// e.g. the single-axis acceleration noise covariance, which has rank 3 of 6).
inline Mat psd_factor(const Mat& S) {
  Eigen::LLT<Mat> llt(S);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::LDLT<Mat> ldlt(S);
  const Vec d = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Mat L = ldlt.matrixL();
  Mat F = L * d.asDiagonal();
  return ldlt.transpositionsP().transpose() * F;
}

/// Draws A x + w. Noise is sampled per target block from one shared factor of W_single.
inline TargetStack step_targets(const TransitionModel& tm, const TargetStack& x, Rng& rng) {
  const Mat6 factor = psd_factor(tm.W_single);
  TargetStack out(x.size());
  for (int m = 0; m < tm.num_targets; ++m) {
    const Eigen::Matrix<double, 6, 1> xi = standard_normal(6, rng);
    out.segment<6>(6 * m) = tm.A_single * x.segment<6>(6 * m) + factor * xi;
  }
  return out;
}

/// Maps an angle to (-pi, pi].
inline double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

/// One Euler step of the second-order unicycle. Controls are clipped before
/// integration; the resulting speed and turn rate are clipped after.
inline RadarState step_radar(const RadarState& r, const Control& u, double dt, const KinematicLimits& lim) {
  const double ua = std::clamp(u[0], lim.ua_min, lim.ua_max);
  const double uw = std::clamp(u[1], lim.uomegadot_min, lim.uomegadot_max);
  const double theta = r[3];
  const double v = r[4];
  const double omega = r[5];
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double half_dt2 = 0.5 * dt * dt;

  RadarState next = r;
  next[0] = r[0] + c * v * dt + c * half_dt2 * ua;
  next[1] = r[1] + s * v * dt + s * half_dt2 * ua;
  next[3] = wrap_angle(theta + omega * dt + half_dt2 * uw);
  next[4] = std::clamp(v + dt * ua, lim.v_min, lim.v_max);
  next[5] = std::clamp(omega + dt * uw, lim.omega_min, lim.omega_max);
  return next;
}

/// Applies one control per radar. controls holds [u_a, u_omegadot] for radar n at 2n, 2n+1.
template <class Derived>
RadarStack step_radars(const RadarStack& radars, const Eigen::MatrixBase<Derived>& controls, double dt,
                       const KinematicLimits& lim) {
  RadarStack out(radars.rows(), kRadarDim);
  for (Eigen::Index n = 0; n < radars.rows(); ++n) {
    const RadarState r = radars.row(n).transpose();
    out.row(n) = step_radar(r, Control(controls[2 * n], controls[2 * n + 1]), dt, lim).transpose();
  }
  return out;
}

}  // namespace radarplace
