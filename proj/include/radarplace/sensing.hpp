#pragma once

#include "radarplace/config.hpp"
#include "radarplace/random.hpp"
#include "radarplace/types.hpp"

#include <cmath>

namespace radarplace {

/// Range-noise model assumed by a consumer (truth simulation, filter, or objective).
/// DDR: var = gamma d^4.  CCR: var = r2t^4 gamma for every pair.
struct MeasurementModel {
  MeasurementKind kind = MeasurementKind::DDR;
  double gamma = 0.0;
  double ccr_variance = 0.0;
};

inline MeasurementModel make_measurement_model(MeasurementKind kind, double gamma, double r2t_m) {
  return {kind, gamma, std::pow(r2t_m, 4) * gamma};
}

inline double checked_distance(const Vec3& radar_pos, const Vec3& target_pos) {
  const double d = (radar_pos - target_pos).norm();
  if (!(d > kMinDistance)) throw DomainError("coincident radar and target (distance " + std::to_string(d) + " m)");
  return d;
}

inline double received_power(const RadarParams& rp, const Vec3& radar_pos, const Vec3& target_pos) {
  return radar_equation_power(rp, checked_distance(radar_pos, target_pos));
}

/// Round-trip range, twice the one-way distance.
inline double range_mean(const Vec3& radar_pos, const Vec3& target_pos) { return 2.0 * (radar_pos - target_pos).norm(); }

inline double range_variance(const MeasurementModel& mm, const Vec3& radar_pos, const Vec3& target_pos) {
  if (mm.kind == MeasurementKind::CCR) return mm.ccr_variance;
  const double d = checked_distance(radar_pos, target_pos);
  const double d2 = d * d;
  return mm.gamma * d2 * d2;
}

/// Measurement index for (target m, radar n); target-major.
inline Eigen::Index measurement_index(Eigen::Index m, Eigen::Index n, Eigen::Index num_radars) {
  return m * num_radars + n;
}

/// Noise-free measurement function h(x), length N*M.
inline Vec expected_ranges(const RadarStack& radars, const TargetStack& targets) {
  const Eigen::Index N = radars.rows();
  const Eigen::Index M = num_targets(targets);
  Vec z(N * M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const Vec3 t = target_position(targets, m);
    for (Eigen::Index n = 0; n < N; ++n) z[measurement_index(m, n, N)] = range_mean(radar_position(radars, n), t);
  }
  return z;
}

inline Vec range_variances(const MeasurementModel& mm, const RadarStack& radars, const TargetStack& targets) {
  const Eigen::Index N = radars.rows();
  const Eigen::Index M = num_targets(targets);
  Vec r(N * M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const Vec3 t = target_position(targets, m);
    for (Eigen::Index n = 0; n < N; ++n) r[measurement_index(m, n, N)] = range_variance(mm, radar_position(radars, n), t);
  }
  return r;
}

/// Independent Gaussian range draws for every radar-target pair.
inline Vec sample_measurements(const MeasurementModel& truth, const RadarStack& radars, const TargetStack& targets,
                               Rng& rng) {
  const Vec mean = expected_ranges(radars, targets);
  const Vec var = range_variances(truth, radars, targets);
  const Vec noise = standard_normal(mean.size(), rng);
  return mean + (var.cwiseSqrt().array() * noise.array()).matrix();
}

}  // namespace radarplace
