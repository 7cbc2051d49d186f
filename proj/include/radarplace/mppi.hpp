#pragma once

#include "radarplace/config.hpp"
#include "radarplace/parallel.hpp"
#include "radarplace/random.hpp"
#include "radarplace/types.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace radarplace {

/// Gaussian proposal over a flattened horizon of controls.
struct ControlPlan {
  Vec mean;
  Mat cov;
};

struct SampleBatch {
  Mat controls;  // one sample per row
  Vec costs;
  Vec weights;
};

struct ShrunkCovariance {
  Mat cov;
  double shrinkage = 0.0;
};

/// Rollouts whose cost is not finite are pinned here and never become elites.
inline constexpr double kInfeasibleCost = 1e15;

/// Diagonal floor added after shrinkage so a collapsed batch still yields a PD proposal.
inline constexpr double kCovarianceFloor = 1e-10;

/// Lower bound on the shrinkage intensity. Two samples give beta2 = 0 exactly (each
/// centred outer product equals S), which would leave the rank-1 scatter untouched.
inline constexpr double kMinShrinkage = 1e-8;

inline bool is_feasible_cost(double c) { return std::isfinite(c) && c < kInfeasibleCost; }

inline Mat sample_controls(const ControlPlan& plan, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("sample count must be >= 0");
  Eigen::LLT<Mat> llt(plan.cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("proposal covariance is not positive definite");
  const Mat L = llt.matrixL();
  const Eigen::Index p = plan.mean.size();
  Mat out(n, p);
  for (int i = 0; i < n; ++i) out.row(i) = (plan.mean + L * standard_normal(p, rng)).transpose();
  return out;
}

/// Importance weights exp(-(S_i - min S) / b), normalized; infeasible rollouts get zero.
inline Vec compute_weights(const Vec& costs, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  double best = std::numeric_limits<double>::infinity();
  for (double c : costs)
    if (is_feasible_cost(c)) best = std::min(best, c);
  if (!std::isfinite(best)) throw std::runtime_error("no feasible rollout");
  Vec w(costs.size());
  for (Eigen::Index i = 0; i < costs.size(); ++i)
    w[i] = is_feasible_cost(costs[i]) ? std::exp(-(costs[i] - best) / temperature) : 0.0;
  return w / w.sum();
}

/// Weighted Ledoit-Wolf shrinkage towards mu*I with mu = tr(S)/p:
///   S      = sum_i w_i y_i y_i^T,  y_i = x_i - sum_j w_j x_j
///   delta2 = ||S - mu I||_F^2
///   beta2  = sum_i w_i^2 ||y_i y_i^T - S||_F^2
///   rho    = max(min(beta2, delta2) / delta2, kMinShrinkage)   (0 when delta2 = 0)
/// With w_i = 1/n this is the classical estimator (as in scikit-learn's ledoit_wolf)
/// whenever its shrinkage is above the floor.
inline ShrunkCovariance ledoit_wolf(const Mat& samples, const Vec& weights) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index p = samples.cols();
  if (n < 2) throw std::invalid_argument("ledoit_wolf needs at least 2 samples");
  if (weights.size() != n) throw std::invalid_argument("ledoit_wolf: weights length mismatch");
  if ((weights.array() < 0.0).any() || !(weights.sum() > 0.0)) throw std::invalid_argument("ledoit_wolf: invalid weights");
  const Vec w = weights / weights.sum();

  const Vec mean = samples.transpose() * w;
  const Mat Y = samples.rowwise() - mean.transpose();
  Mat S = Y.transpose() * w.asDiagonal() * Y;
  S = 0.5 * (S + S.transpose());
  const double mu = S.trace() / static_cast<double>(p);
  const Mat target = mu * Mat::Identity(p, p);
  const double delta2 = (S - target).squaredNorm();

  double beta2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    const Vec y = Y.row(i).transpose();
    beta2 += w[i] * w[i] * (y * y.transpose() - S).squaredNorm();
  }
  ShrunkCovariance out;
  out.shrinkage = delta2 > 0.0 ? std::max(std::min(beta2, delta2) / delta2, kMinShrinkage) : 0.0;
  out.cov = (1.0 - out.shrinkage) * S + out.shrinkage * target;
  return out;
}

/// Size of the elite set kept by the cross-entropy step: the best (1 - quantile) share.
inline int elite_count(int num_samples, double elite_quantile) {
  const long raw = std::lround((1.0 - elite_quantile) * static_cast<double>(num_samples));
  return static_cast<int>(std::clamp<long>(raw, 2, std::max(2, num_samples)));
}

inline ControlPlan adapt(const ControlPlan& /*previous*/, const SampleBatch& batch, const MppiParams& mppi) {
  const int n = static_cast<int>(batch.controls.rows());
  if (n < 2) throw std::invalid_argument("adapt needs at least 2 samples");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool fa = is_feasible_cost(batch.costs[a]);
    const bool fb = is_feasible_cost(batch.costs[b]);
    if (fa != fb) return fa;
    return fa && batch.costs[a] < batch.costs[b];
  });
  int feasible = 0;
  for (int i = 0; i < n; ++i) feasible += is_feasible_cost(batch.costs[i]) ? 1 : 0;
  const int k = std::max(2, std::min(elite_count(n, mppi.elite_quantile), feasible));

  Mat elites(k, batch.controls.cols());
  Vec w(k);
  for (int j = 0; j < k; ++j) {
    elites.row(j) = batch.controls.row(order[j]);
    w[j] = batch.weights[order[j]];
  }
  // Only reachable when fewer than 2 rollouts are feasible; fall back to equal weights.
  if (!(w.sum() > 0.0)) w.setConstant(1.0);
  w /= w.sum();

  ControlPlan out;
  out.mean = elites.transpose() * w;
  out.cov = ledoit_wolf(elites, w).cov;
  out.cov.diagonal().array() += kCovarianceFloor;
  return out;
}

/// Zero-mean proposal with the per-channel initial stds repeated over steps and radars.
inline ControlPlan initial_plan(int horizon, int num_radars, const MppiParams& mppi) {
  const Eigen::Index p = static_cast<Eigen::Index>(horizon) * kControlDim * num_radars;
  ControlPlan plan;
  plan.mean = Vec::Zero(p);
  Vec diag(p);
  for (Eigen::Index i = 0; i < p; i += kControlDim) {
    diag[i] = mppi.std_accel * mppi.std_accel;
    diag[i + 1] = mppi.std_angaccel * mppi.std_angaccel;
  }
  plan.cov = diag.asDiagonal();
  return plan;
}

/// Receding-horizon warm start: drop the first step and repeat the last one.
inline Vec shift_plan(const Vec& mean, int num_radars) {
  const Eigen::Index step = static_cast<Eigen::Index>(kControlDim) * num_radars;
  if (step == 0 || mean.size() % step != 0) throw std::invalid_argument("shift_plan: length must be K * 2N");
  Vec out(mean.size());
  const Eigen::Index keep = mean.size() - step;
  out.head(keep) = mean.tail(keep);
  out.tail(step) = mean.tail(step);
  return out;
}

/// Cross-entropy flavoured MPPI. cost(controls) is evaluated concurrently and must be
/// thread-safe; non-finite results are clamped to kInfeasibleCost. If last_batch is
/// given it receives the batch of the final sub-iteration.
template <class CostFn>
ControlPlan plan(const ControlPlan& warm_start, CostFn&& cost, const MppiParams& mppi, Rng& rng,
                 SampleBatch* last_batch = nullptr) {
  ControlPlan current = warm_start;
  for (int it = 0; it < mppi.num_subiters; ++it) {
    SampleBatch batch;
    batch.controls = sample_controls(current, mppi.num_samples, rng);
    batch.costs.resize(mppi.num_samples);
    parallel_for(mppi.num_samples, [&](std::ptrdiff_t i) {
      const Vec u = batch.controls.row(i).transpose();
      double c = kInfeasibleCost;
      try {
        c = cost(u);
      } catch (const DomainError&) {
        c = kInfeasibleCost;
      }
      batch.costs[i] = std::isfinite(c) ? std::min(c, kInfeasibleCost) : kInfeasibleCost;
    });
    batch.weights = compute_weights(batch.costs, mppi.temperature);
    current = adapt(current, batch, mppi);
    if (last_batch != nullptr && it + 1 == mppi.num_subiters) *last_batch = std::move(batch);
  }
  return current;
}

}  // namespace radarplace
