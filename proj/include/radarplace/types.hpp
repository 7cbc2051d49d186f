#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace radarplace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Per-radar state [x, y, z, heading, speed, turn rate].
using RadarState = Eigen::Matrix<double, 6, 1>;
/// N x 6, one radar per row.
using RadarStack = Eigen::Matrix<double, Eigen::Dynamic, 6, Eigen::RowMajor>;
/// Concatenated per-target [x, y, z, vx, vy, vz], length 6M.
using TargetStack = Eigen::VectorXd;
/// [u_a, u_omegadot]
using Control = Eigen::Vector2d;

inline constexpr int kTargetDim = 6;
inline constexpr int kRadarDim = 6;
inline constexpr int kControlDim = 2;

/// Radar-target separation below which range sensing is undefined.
inline constexpr double kMinDistance = 1e-6;

inline constexpr double kSpeedOfLight = 299792458.0;

enum class MeasurementKind { DDR, CCR };
enum class ControllerKind { MPPI, Stationary };
enum class FimMode { SFIM, PFIM };

/// Geometry outside the domain of the range model (coincident radar and target).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline Vec3 target_position(const TargetStack& targets, Eigen::Index m) {
  return targets.segment<3>(kTargetDim * m);
}

inline Vec3 radar_position(const RadarStack& radars, Eigen::Index n) {
  return radars.row(n).head<3>().transpose();
}

inline Eigen::Index num_targets(const TargetStack& targets) { return targets.size() / kTargetDim; }

inline std::string_view to_string(MeasurementKind k) { return k == MeasurementKind::DDR ? "ddr" : "ccr"; }
inline std::string_view to_string(ControllerKind k) { return k == ControllerKind::MPPI ? "mppi" : "stationary"; }
inline std::string_view to_string(FimMode k) { return k == FimMode::SFIM ? "sfim" : "pfim"; }

inline MeasurementKind parse_measurement_kind(std::string_view s) {
  if (s == "ddr" || s == "DDR") return MeasurementKind::DDR;
  if (s == "ccr" || s == "CCR") return MeasurementKind::CCR;
  throw std::invalid_argument("unknown measurement model '" + std::string(s) + "' (expected ddr|ccr)");
}

inline ControllerKind parse_controller_kind(std::string_view s) {
  if (s == "mppi" || s == "MPPI") return ControllerKind::MPPI;
  if (s == "stationary" || s == "STATIONARY") return ControllerKind::Stationary;
  throw std::invalid_argument("unknown controller '" + std::string(s) + "' (expected mppi|stationary)");
}

inline FimMode parse_fim_mode(std::string_view s) {
  if (s == "sfim" || s == "SFIM") return FimMode::SFIM;
  if (s == "pfim" || s == "PFIM") return FimMode::PFIM;
  throw std::invalid_argument("unknown fim mode '" + std::string(s) + "' (expected sfim|pfim)");
}

}  // namespace radarplace
