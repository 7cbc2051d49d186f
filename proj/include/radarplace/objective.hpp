#pragma once

#include "radarplace/ckf.hpp"
#include "radarplace/config.hpp"
#include "radarplace/dynamics.hpp"
#include "radarplace/fim.hpp"
#include "radarplace/sensing.hpp"
#include "radarplace/types.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace radarplace {

struct CostBreakdown {
  double total = 0.0;
  double traj = 0.0;
  double r2r = 0.0;
  double r2t = 0.0;
};

/// Fixed inputs of the receding-horizon cost for one control tick.
struct ObjectiveContext {
  MpcParams mpc;
  MeasurementModel model;  // noise model the controller believes in
  FimMode mode = FimMode::SFIM;
  KinematicLimits limits;
  double dt = 0.1;
  const TransitionModel* transition = nullptr;  // PFIM only
  Mat pfim_init;                                // PFIM only: information at the first horizon state
};

/// Direct shooting: K controls (flattened [t][radar][u_a, u_omegadot]) -> K + 1 radar
/// configurations, the first being radars0 itself.
template <class Derived>
std::vector<RadarStack> rollout_radars(const RadarStack& radars0, const Eigen::MatrixBase<Derived>& controls, double dt,
                                       const KinematicLimits& limits) {
  const Eigen::Index step = kControlDim * radars0.rows();
  if (step == 0 || controls.size() % step != 0) throw std::invalid_argument("control vector length must be K * 2N");
  const Eigen::Index K = controls.size() / step;
  std::vector<RadarStack> traj;
  traj.reserve(static_cast<std::size_t>(K + 1));
  traj.push_back(radars0);
  for (Eigen::Index t = 0; t < K; ++t) traj.push_back(step_radars(traj.back(), controls.segment(t * step, step), dt, limits));
  return traj;
}

namespace objective_impl {

inline void check_lengths(const std::vector<RadarStack>& radar_traj, const std::vector<SigmaSet>& sigma_sets) {
  if (radar_traj.empty()) throw std::invalid_argument("empty horizon");
  if (radar_traj.size() != sigma_sets.size()) throw std::invalid_argument("radar trajectory and sigma sets differ in length");
}

// Sum over the sigma points of logdet_block_diagonal(sfim_blocks(point, radars), default
// jitter). This is the planner's hot loop: it runs the radar loop outside the point loop
// so the per-point work is independent, and it avoids Eigen temporaries. Tests pin it
// against the matrix formulation. scratch holds 6 unique entries (xx, xy, xz, yy, yz, zz)
// per (point, target) plus one trace per point. If r2t_count is given it also receives
// the number of (point, target, radar) triples within sqrt(r2t_sq).
inline double sfim_logdet_sum(const SigmaSet& sig, const std::vector<Vec3>& radars, const MeasurementModel& mm,
                              std::vector<double>& scratch, double r2t_sq = 0.0, long* r2t_count = nullptr) {
  const Eigen::Index d = sig.points.rows();
  const Eigen::Index M = d / kTargetDim;
  const Eigen::Index P = sig.size();
  const std::size_t stride = static_cast<std::size_t>(6 * M + 1);
  scratch.assign(static_cast<std::size_t>(P) * stride, 0.0);
  const double* pts = sig.points.data();
  const bool ccr = mm.kind == MeasurementKind::CCR;
  const double k_ccr = 4.0 / mm.ccr_variance;
  const double k_ddr = 4.0 / mm.gamma;
  const double min_d2 = kMinDistance * kMinDistance;
  long close = 0;

  for (Eigen::Index m = 0; m < M; ++m) {
    for (const Vec3& r : radars) {
      for (Eigen::Index i = 0; i < P; ++i) {
        const double* x = pts + i * d + kTargetDim * m;
        const double dx = x[0] - r[0];
        const double dy = x[1] - r[1];
        const double dz = x[2] - r[2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (!(d2 > min_d2)) throw DomainError("coincident radar and target");
        close += d2 <= r2t_sq ? 1 : 0;
        const double inv = 1.0 / d2;
        const double c = ccr ? k_ccr * inv : inv * inv * (k_ddr * inv + 8.0);
        double* b = scratch.data() + static_cast<std::size_t>(i) * stride + 6 * static_cast<std::size_t>(m);
        b[0] += c * dx * dx;
        b[1] += c * dx * dy;
        b[2] += c * dx * dz;
        b[3] += c * dy * dy;
        b[4] += c * dy * dz;
        b[5] += c * dz * dz;
      }
    }
  }

  if (r2t_count != nullptr) *r2t_count = close;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < P; ++i) {
    const double* blocks = scratch.data() + static_cast<std::size_t>(i) * stride;
    double trace = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) trace += blocks[6 * m] + blocks[6 * m + 3] + blocks[6 * m + 5];
    const double jitter = default_logdet_jitter(trace, 3 * M);
    double total = 0.0;
    double product = 1.0;
    bool failed = false;
    for (Eigen::Index m = 0; m < M && !failed; ++m) {
      const double* b = blocks + 6 * m;
      const double a = b[0] + jitter;
      const double e = b[3] + jitter;
      const double f = b[5] + jitter;
      const double minor2 = a * e - b[1] * b[1];
      const double det = a * (e * f - b[4] * b[4]) - b[1] * (b[1] * f - b[2] * b[4]) + b[2] * (b[1] * b[4] - e * b[2]);
      if (!(a > 0.0) || !(minor2 > 0.0) || !(det > 0.0)) {
        failed = true;
        break;
      }
      product *= det;
      if (product < 1e-200 || product > 1e200) {
        total += std::log(product);
        product = 1.0;
      }
    }
    sum += failed ? kLogdetFailure : total + std::log(product);
  }
  return sum;
}

inline std::vector<Vec3> positions(const RadarStack& radars) {
  std::vector<Vec3> out(static_cast<std::size_t>(radars.rows()));
  for (Eigen::Index n = 0; n < radars.rows(); ++n) out[static_cast<std::size_t>(n)] = radar_position(radars, n);
  return out;
}

}  // namespace objective_impl

/// Discounted negative information: sum_t gamma^t * (-E[log det J_t]).
/// SFIM: expectation over the sigma points of each step. PFIM: one recursion threaded
/// through the horizon from ctx.pfim_init, driven by belief-averaged data information.
inline double traj_cost(const std::vector<RadarStack>& radar_traj, const std::vector<SigmaSet>& sigma_sets,
                        const ObjectiveContext& ctx) {
  objective_impl::check_lengths(radar_traj, sigma_sets);
  double total = 0.0;
  double discount = 1.0;
  if (ctx.mode == FimMode::SFIM) {
    std::vector<double> scratch;
    for (std::size_t t = 0; t < radar_traj.size(); ++t) {
      const SigmaSet& sig = sigma_sets[t];
      const double acc = objective_impl::sfim_logdet_sum(sig, objective_impl::positions(radar_traj[t]), ctx.model, scratch);
      total += discount * (-acc * sig.weight());
      discount *= ctx.mpc.discount;
    }
    return total;
  }

  if (ctx.transition == nullptr) throw std::invalid_argument("PFIM objective needs a transition model");
  Mat J = ctx.pfim_init;
  for (std::size_t t = 0; t < radar_traj.size(); ++t) {
    if (t > 0) J = pfim_step_simplified(J, *ctx.transition, expected_jd(sigma_sets[t], radar_traj[t], ctx.model));
    total += discount * (-logdet_objective(J, default_logdet_jitter(J)));
    discount *= ctx.mpc.discount;
  }
  return total;
}

/// Discounted expected count of radar-target pairs within r2t_m (closed boundary).
inline double r2t_penalty(const std::vector<RadarStack>& radar_traj, const std::vector<SigmaSet>& sigma_sets,
                          const MpcParams& mpc) {
  objective_impl::check_lengths(radar_traj, sigma_sets);
  const double r2 = mpc.r2t_m * mpc.r2t_m;
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < radar_traj.size(); ++t) {
    const std::vector<Vec3> radars = objective_impl::positions(radar_traj[t]);
    const SigmaSet& sig = sigma_sets[t];
    const Eigen::Index M = sig.points.rows() / kTargetDim;
    long count = 0;
    for (Eigen::Index i = 0; i < sig.size(); ++i) {
      const double* x = sig.points.col(i).data();
      for (Eigen::Index m = 0; m < M; ++m) {
        for (const Vec3& r : radars) {
          const double dx = x[kTargetDim * m] - r[0];
          const double dy = x[kTargetDim * m + 1] - r[1];
          const double dz = x[kTargetDim * m + 2] - r[2];
          if (dx * dx + dy * dy + dz * dz <= r2) ++count;
        }
      }
    }
    total += discount * static_cast<double>(count) * sig.weight();
    discount *= mpc.discount;
  }
  return total;
}

/// Discounted count of unordered radar pairs within r2r_m.
inline double r2r_penalty(const std::vector<RadarStack>& radar_traj, const MpcParams& mpc) {
  const double r2 = mpc.r2r_m * mpc.r2r_m;
  double total = 0.0;
  double discount = 1.0;
  for (const RadarStack& radars : radar_traj) {
    long count = 0;
    for (Eigen::Index i = 0; i < radars.rows(); ++i)
      for (Eigen::Index j = i + 1; j < radars.rows(); ++j)
        if ((radar_position(radars, i) - radar_position(radars, j)).squaredNorm() <= r2) ++count;
    total += discount * static_cast<double>(count);
    discount *= mpc.discount;
  }
  return total;
}

/// Full cost of a flattened control sequence: sigma_sets must hold K + 1 sets, aligned
/// with radars0 and the K post-control configurations.
template <class Derived>
CostBreakdown total_cost(const Eigen::MatrixBase<Derived>& controls, const RadarStack& radars0,
                         const std::vector<SigmaSet>& sigma_sets, const ObjectiveContext& ctx) {
  if (controls.size() == 0) throw std::invalid_argument("horizon must be >= 1");
  if (!controls.allFinite()) throw std::invalid_argument("controls must be finite");
  const std::vector<RadarStack> traj = rollout_radars(radars0, controls, ctx.dt, ctx.limits);
  CostBreakdown c;
  if (ctx.mode == FimMode::SFIM) {
    // Single pass for the information term and the radar-target penalty; same sums as
    // traj_cost and r2t_penalty.
    objective_impl::check_lengths(traj, sigma_sets);
    std::vector<double> scratch;
    const double r2t_sq = ctx.mpc.r2t_m * ctx.mpc.r2t_m;
    double discount = 1.0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const SigmaSet& sig = sigma_sets[t];
      long close = 0;
      const double acc =
          objective_impl::sfim_logdet_sum(sig, objective_impl::positions(traj[t]), ctx.model, scratch, r2t_sq, &close);
      c.traj += discount * (-acc * sig.weight());
      c.r2t += discount * static_cast<double>(close) * sig.weight();
      discount *= ctx.mpc.discount;
    }
  } else {
    c.traj = traj_cost(traj, sigma_sets, ctx);
    c.r2t = r2t_penalty(traj, sigma_sets, ctx.mpc);
  }
  c.r2r = r2r_penalty(traj, ctx.mpc);
  c.total = c.traj + ctx.mpc.alpha_r2r * c.r2r + ctx.mpc.alpha_r2t * c.r2t;
  return c;
}

}  // namespace radarplace
