#pragma once

#include "radarplace/dynamics.hpp"
#include "radarplace/sensing.hpp"
#include "radarplace/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace radarplace {

/// Returned by logdet_objective when the matrix cannot be factorized.
inline constexpr double kLogdetFailure = -1e12;

/// Relative jitter added to W before any W^{-1}-dependent PFIM step. W from the
/// constant-velocity model has rank 3 per target, so the raw recursion needs it.
inline constexpr double kTransitionJitterRel = 1e-6;

/// Scalar c such that a single radar's position information is c * D D^T, where D is
/// the target-radar offset and d2 = |D|^2. DDR: 4 / (gamma d^6) + 8 / d^4. CCR has no
/// variance gradient, leaving only the mean term 4 / (d^2 var).
inline double sfim_pair_scale(const MeasurementModel& mm, double d2) {
  if (mm.kind == MeasurementKind::CCR) return 4.0 / (d2 * mm.ccr_variance);
  const double d4 = d2 * d2;
  return 4.0 / (mm.gamma * d4 * d2) + 8.0 / d4;
}

inline double checked_squared_distance(const Vec3& delta) {
  const double d2 = delta.squaredNorm();
  if (!(d2 > kMinDistance * kMinDistance))
    throw DomainError("coincident radar and target (distance " + std::to_string(std::sqrt(d2)) + " m)");
  return d2;
}

/// Range-only Fisher information of one target position from one radar, DDR model:
/// J = D D^T (4 / (gamma d^6) + 8 / d^4), D = target - radar.
inline Mat3 sfim_single(const Vec3& target_pos, const Vec3& radar_pos, double gamma) {
  const Vec3 delta = target_pos - radar_pos;
  const double d2 = checked_squared_distance(delta);
  return sfim_pair_scale(MeasurementModel{MeasurementKind::DDR, gamma, 0.0}, d2) * (delta * delta.transpose());
}

inline Mat3 sfim_single(const Vec3& target_pos, const Vec3& radar_pos, const MeasurementModel& mm) {
  const Vec3 delta = target_pos - radar_pos;
  const double d2 = checked_squared_distance(delta);
  return sfim_pair_scale(mm, d2) * (delta * delta.transpose());
}

/// Per-target 3x3 blocks of the multi-radar SFIM (radar contributions summed).
/// targets is any 6M-vector expression (a stack or a sigma-point column).
template <class Derived>
void sfim_blocks(const Eigen::MatrixBase<Derived>& targets, const RadarStack& radars, const MeasurementModel& mm,
                 std::vector<Mat3>& blocks) {
  const Eigen::Index M = targets.size() / kTargetDim;
  blocks.assign(static_cast<std::size_t>(M), Mat3::Zero());
  for (Eigen::Index m = 0; m < M; ++m) {
    const Vec3 t = targets.template segment<3>(kTargetDim * m);
    Mat3& b = blocks[static_cast<std::size_t>(m)];
    for (Eigen::Index n = 0; n < radars.rows(); ++n) {
      const Vec3 delta = t - radar_position(radars, n);
      const double c = sfim_pair_scale(mm, checked_squared_distance(delta));
      b.noalias() += c * (delta * delta.transpose());
    }
  }
}

/// 3M x 3M block-diagonal SFIM over all target positions.
inline Mat sfim_multi(const TargetStack& targets, const RadarStack& radars, const MeasurementModel& mm) {
  std::vector<Mat3> blocks;
  sfim_blocks(targets, radars, mm, blocks);
  const Eigen::Index M = num_targets(targets);
  Mat J = Mat::Zero(3 * M, 3 * M);
  for (Eigen::Index m = 0; m < M; ++m) J.block<3, 3>(3 * m, 3 * m) = blocks[m];
  return J;
}

inline Mat sfim_multi(const TargetStack& targets, const RadarStack& radars, double gamma) {
  return sfim_multi(targets, radars, MeasurementModel{MeasurementKind::DDR, gamma, 0.0});
}

/// Lifts a position SFIM (3M) into full-state coordinates (6M); velocity rows/cols are zero.
inline Mat embed_velocity(const Mat& sfim_pos) {
  const Eigen::Index M = sfim_pos.rows() / 3;
  Mat J = Mat::Zero(6 * M, 6 * M);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < M; ++j) J.block<3, 3>(6 * i, 6 * j) = sfim_pos.block<3, 3>(3 * i, 3 * j);
  return J;
}

inline Mat regularized_process_noise(const TransitionModel& tm) {
  const Eigen::Index dim = tm.W.rows();
  const double jitter = kTransitionJitterRel * (tm.W.trace() / static_cast<double>(dim));
  return tm.W + jitter * Mat::Identity(dim, dim);
}

inline Mat symmetrized(const Mat& P) { return 0.5 * (P + P.transpose()); }

/// PFIM recursion in information form with W^{-1} eliminated:
/// J' = (W + A J^{-1} A^T)^{-1} + E[J_D]
inline Mat pfim_step_simplified(const Mat& J, const TransitionModel& tm, const Mat& expected_jd) {
  Eigen::LLT<Mat> j_llt(J);
  if (j_llt.info() != Eigen::Success) throw std::runtime_error("PFIM singular; check initialization");
  const Mat J_inv_At = j_llt.solve(tm.A.transpose());
  const Mat S = regularized_process_noise(tm) + tm.A * J_inv_At;
  Eigen::LLT<Mat> s_llt(symmetrized(S));
  if (s_llt.info() != Eigen::Success) throw std::runtime_error("PFIM singular; check initialization");
  const Mat prior = s_llt.solve(Mat::Identity(S.rows(), S.cols()));
  return symmetrized(prior + expected_jd);
}

/// Blocks of the raw recursion J' = D22 - D21 (J + D11)^{-1} D12.
struct PfimTerms {
  Mat D11;
  Mat D12;
  Mat D21;
  Mat D22;
};

inline PfimTerms pfim_terms(const TransitionModel& tm, const Mat& expected_jd) {
  const Mat W = regularized_process_noise(tm);
  Eigen::LLT<Mat> w_llt(W);
  if (w_llt.info() != Eigen::Success) throw std::runtime_error("process noise covariance singular after jitter");
  const Mat W_inv = w_llt.solve(Mat::Identity(W.rows(), W.cols()));
  PfimTerms t;
  t.D11 = tm.A.transpose() * W_inv * tm.A;
  t.D12 = -tm.A.transpose() * W_inv;
  t.D21 = t.D12.transpose();
  t.D22 = W_inv + expected_jd;
  return t;
}

inline Mat pfim_step_raw(const Mat& J, const TransitionModel& tm, const Mat& expected_jd) {
  const PfimTerms t = pfim_terms(tm, expected_jd);
  Eigen::LDLT<Mat> ldlt(symmetrized(J + t.D11));
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("PFIM singular; check initialization");
  return symmetrized(t.D22 - t.D21 * ldlt.solve(t.D12));
}

/// Default jitter for the information objective: 1e-9 (1 + trace / dim).
inline double default_logdet_jitter(double trace, Eigen::Index dim) {
  return 1e-9 * (1.0 + trace / static_cast<double>(dim));
}

inline double default_logdet_jitter(const Mat& J) { return default_logdet_jitter(J.trace(), J.rows()); }

/// log det(J + jitter I) via Cholesky; kLogdetFailure if J + jitter I is not positive definite.
inline double logdet_objective(const Mat& J, double jitter) {
  const Mat Jj = J + jitter * Mat::Identity(J.rows(), J.cols());
  Eigen::LLT<Mat> llt(Jj);
  if (llt.info() != Eigen::Success) return kLogdetFailure;
  const Vec diag = Mat(llt.matrixL()).diagonal();
  if ((diag.array() <= 0.0).any()) return kLogdetFailure;
  return 2.0 * diag.array().log().sum();
}

/// logdet_objective of a block-diagonal matrix given by its 3x3 blocks; the jitter is
/// shared so the result matches the dense evaluation. Determinants are multiplied in
/// batches to keep the number of log calls low.
inline double logdet_block_diagonal(const std::vector<Mat3>& blocks, double jitter) {
  double total = 0.0;
  double product = 1.0;
  for (const Mat3& b : blocks) {
    const Mat3 bj = b + jitter * Mat3::Identity();
    // PD test by leading principal minors (Sylvester).
    const double m1 = bj(0, 0);
    const double m2 = bj(0, 0) * bj(1, 1) - bj(0, 1) * bj(1, 0);
    const double det = bj.determinant();
    if (!(m1 > 0.0) || !(m2 > 0.0) || !(det > 0.0)) return kLogdetFailure;
    product *= det;
    if (product < 1e-200 || product > 1e200) {
      total += std::log(product);
      product = 1.0;
    }
  }
  return total + std::log(product);
}

}  // namespace radarplace
