#pragma once

#include "radarplace/detail/kv_text.hpp"
#include "radarplace/types.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace radarplace {

/// Radar-equation constants. Defaults are the experiment values.
struct RadarParams {
  double carrier_freq_hz = 1e8;
  double transmit_power_w = 1000.0;
  double gain_tx = 200.0;
  double gain_rx = 200.0;
  double loss = 1.0;
  double rcs_m2 = 1.0;
  double snr_db = -20.0;
  double snr_ref_radius_m = 500.0;
  double speed_of_light_mps = kSpeedOfLight;

  double wavelength() const { return speed_of_light_mps / carrier_freq_hz; }
};

struct MpcParams {
  double discount = 0.95;
  int horizon_steps = 15;
  double r2t_m = 125.0;
  double r2r_m = 10.0;
  double alpha_r2r = 500.0;
  double alpha_r2t = 1000.0;
};

struct MppiParams {
  double std_accel = 25.0;
  double std_angaccel = std::numbers::pi / 4.0;
  int num_samples = 200;
  int num_subiters = 5;
  double temperature = 0.1;
  double elite_quantile = 0.9;
};

struct KinematicLimits {
  double v_min = 0.0;
  double v_max = 50.0;
  double omega_min = -std::numbers::pi;
  double omega_max = std::numbers::pi;
  double ua_min = -25.0;
  double ua_max = 25.0;
  double uomegadot_min = -std::numbers::pi / 4.0;
  double uomegadot_max = std::numbers::pi / 4.0;
};

/// Initial CKF belief: truth perturbed by these stds; covariance is their squares.
struct FilterParams {
  double prior_pos_std_m = 10.0;
  double prior_vel_std_mps = 5.0;
};

struct ScenarioConfig {
  int num_radars = 0;
  int num_targets = 0;
  double dt_s = 0.1;
  int num_steps = 600;
  int control_period_steps = 1;
  double accel_noise_std = std::sqrt(10.0);
  Mat initial_targets;  // M x 6
  double radar_init_square_edge_m = 800.0;
  KinematicLimits limits;
  MeasurementKind measurement_model = MeasurementKind::DDR;
  ControllerKind controller = ControllerKind::MPPI;
  FimMode fim_mode = FimMode::SFIM;
  std::uint64_t seed = 0;

  TargetStack initial_target_stack() const {
    TargetStack x(6 * num_targets);
    for (int m = 0; m < num_targets; ++m) x.segment<6>(6 * m) = initial_targets.row(m).transpose();
    return x;
  }
};

/// Everything a scenario file defines.
struct Scenario {
  ScenarioConfig scenario;
  RadarParams radar;
  MpcParams mpc;
  MppiParams mppi;
  FilterParams filter;
};

/// Bad scenario input. key() names the offending entry as "section.key" (empty for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// P_r = P_t G_t G_r lambda^2 RCS / ((4 pi)^3 d^4 L)
inline double radar_equation_power(const RadarParams& rp, double distance_m) {
  const double lambda = rp.wavelength();
  const double four_pi = 4.0 * std::numbers::pi;
  return rp.transmit_power_w * rp.gain_tx * rp.gain_rx * lambda * lambda * rp.rcs_m2 /
         (four_pi * four_pi * four_pi * std::pow(distance_m, 4) * rp.loss);
}

/// Receiver noise power that yields snr_db for a return from snr_ref_radius_m, summed over M targets.
inline double noise_power(const RadarParams& rp, int num_targets) {
  const double ref_power = radar_equation_power(rp, rp.snr_ref_radius_m);
  return num_targets * ref_power / std::pow(10.0, rp.snr_db / 10.0);
}

/// Range-variance constant: var(z) = gamma * d^4. Full form, wavelength kept explicit.
inline double gamma_const(const RadarParams& rp, double sigma_a2) {
  const double pi = std::numbers::pi;
  const double c = rp.speed_of_light_mps;
  const double fc = rp.carrier_freq_hz;
  const double lambda = rp.wavelength();
  const double four_pi_cubed = std::pow(4.0 * pi, 3);
  return c * c * sigma_a2 * four_pi_cubed * rp.loss /
         (8.0 * pi * pi * fc * fc * rp.transmit_power_w * rp.gain_tx * rp.gain_rx * lambda * lambda * rp.rcs_m2);
}

/// Same constant with lambda = c / f_c eliminated.
inline double gamma_const_reduced(const RadarParams& rp, double sigma_a2) {
  return 8.0 * std::numbers::pi * sigma_a2 * rp.loss / (rp.transmit_power_w * rp.gain_tx * rp.gain_rx * rp.rcs_m2);
}

inline double scenario_gamma(const Scenario& s) {
  return gamma_const(s.radar, noise_power(s.radar, s.scenario.num_targets));
}

// ---------------------------------------------------------------------------
// Parsing

namespace config_impl {

using detail::KvArray;
using detail::KvDocument;
using detail::KvValue;

class Reader {
 public:
  explicit Reader(KvDocument doc) : doc_(std::move(doc)) {}

  bool has(const std::string& key) const { return doc_.values.count(key) != 0; }

  double number(const std::string& key, double fallback, bool required = false) {
    const KvValue* v = find(key, required);
    if (v == nullptr) return fallback;
    if (const double* d = std::get_if<double>(v)) return *d;
    throw ConfigError(key, "expected a number");
  }

  /// Angle keys accept either "<key>" in radians or "<key>_deg" in degrees.
  double angle(const std::string& key, double fallback) {
    const std::string deg_key = key + "_deg";
    if (has(key) && has(deg_key)) throw ConfigError(key, "both radian and degree forms given");
    if (has(deg_key)) return number(deg_key, 0.0) * std::numbers::pi / 180.0;
    return number(key, fallback);
  }

  int integer(const std::string& key, int fallback, bool required = false) {
    const double d = number(key, fallback, required);
    if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError(key, "expected an integer");
    return static_cast<int>(d);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const KvValue* v = find(key, false);
    if (v == nullptr) return fallback;
    if (const std::string* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError(key, "expected a quoted string");
  }

  Mat matrix(const std::string& key, bool required) {
    const KvValue* v = find(key, required);
    if (v == nullptr) return {};
    const KvArray* rows = std::get_if<KvArray>(v);
    if (rows == nullptr) throw ConfigError(key, "expected a nested array");
    Mat out(static_cast<Eigen::Index>(rows->items.size()), 6);
    for (std::size_t r = 0; r < rows->items.size(); ++r) {
      const KvArray* row = std::get_if<KvArray>(&rows->items[r]);
      if (row == nullptr || row->items.size() != 6)
        throw ConfigError(key, "row " + std::to_string(r) + " must have exactly 6 entries");
      for (std::size_t c = 0; c < 6; ++c) {
        const double* d = std::get_if<double>(&row->items[c]);
        if (d == nullptr) throw ConfigError(key, "row " + std::to_string(r) + " has a non-numeric entry");
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *d;
      }
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, _] : doc_.values) {
      if (consumed_.count(key) == 0) throw ConfigError(key, "unknown key");
    }
  }

 private:
  KvDocument doc_;
  std::set<std::string> consumed_;

  const KvValue* find(const std::string& key, bool required) {
    auto it = doc_.values.find(key);
    if (it == doc_.values.end()) {
      if (required) throw ConfigError(key, "missing required key");
      return nullptr;
    }
    consumed_.insert(key);
    return &it->second;
  }
};

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace config_impl

/// Checks every invariant; throws ConfigError naming the key.
inline void validate(const Scenario& s) {
  using config_impl::require;
  const auto& sc = s.scenario;
  const auto& rp = s.radar;
  require(rp.carrier_freq_hz > 0, "radar.carrier_freq_hz", "must be > 0");
  require(rp.transmit_power_w > 0, "radar.transmit_power_w", "must be > 0");
  require(rp.gain_tx > 0, "radar.gain_tx", "must be > 0");
  require(rp.gain_rx > 0, "radar.gain_rx", "must be > 0");
  require(rp.loss > 0, "radar.loss", "must be > 0");
  require(rp.rcs_m2 > 0, "radar.rcs_m2", "must be > 0");
  require(rp.snr_ref_radius_m > 0, "radar.snr_ref_radius_m", "must be > 0");
  require(std::isfinite(rp.snr_db), "radar.snr_db", "must be finite");

  require(s.mpc.discount > 0 && s.mpc.discount <= 1, "mpc.discount", "must be in (0, 1]");
  require(s.mpc.horizon_steps >= 1, "mpc.horizon_steps", "must be >= 1");
  require(s.mpc.r2t_m >= 0, "mpc.r2t_m", "must be >= 0");
  require(s.mpc.r2r_m >= 0, "mpc.r2r_m", "must be >= 0");
  require(s.mpc.alpha_r2r >= 0, "mpc.alpha_r2r", "must be >= 0");
  require(s.mpc.alpha_r2t >= 0, "mpc.alpha_r2t", "must be >= 0");

  require(s.mppi.std_accel > 0, "mppi.std_accel", "must be > 0");
  require(s.mppi.std_angaccel > 0, "mppi.std_angaccel", "must be > 0");
  require(s.mppi.num_samples >= 2, "mppi.num_samples", "num_samples >= 2 required");
  require(s.mppi.num_subiters >= 0, "mppi.num_subiters", "must be >= 0");
  require(s.mppi.temperature > 0, "mppi.temperature", "must be > 0");
  require(s.mppi.elite_quantile > 0 && s.mppi.elite_quantile < 1, "mppi.elite_quantile", "must be in (0, 1)");

  require(s.filter.prior_pos_std_m > 0, "filter.prior_pos_std_m", "must be > 0");
  require(s.filter.prior_vel_std_mps > 0, "filter.prior_vel_std_mps", "must be > 0");

  require(sc.num_radars >= 1, "scenario.num_radars", "must be >= 1");
  require(sc.num_targets >= 1, "scenario.num_targets", "must be >= 1");
  require(sc.dt_s > 0, "scenario.dt_s", "must be > 0");
  require(sc.num_steps >= 1, "scenario.num_steps", "must be >= 1");
  require(sc.control_period_steps >= 1, "scenario.control_period_steps", "must be >= 1");
  require(sc.accel_noise_std >= 0, "scenario.accel_noise_std", "must be >= 0");
  require(sc.radar_init_square_edge_m >= 0, "scenario.radar_init_square_edge_m", "must be >= 0");
  require(sc.initial_targets.rows() == sc.num_targets, "scenario.initial_targets",
          "expected " + std::to_string(sc.num_targets) + " rows, got " + std::to_string(sc.initial_targets.rows()));
  require(sc.initial_targets.allFinite(), "scenario.initial_targets", "entries must be finite");

  const auto& l = sc.limits;
  require(l.v_min <= l.v_max, "limits.v_min", "v_min must be <= v_max");
  require(l.omega_min <= l.omega_max, "limits.omega_min", "omega_min must be <= omega_max");
  require(l.ua_min <= l.ua_max, "limits.ua_min", "ua_min must be <= ua_max");
  require(l.uomegadot_min <= l.uomegadot_max, "limits.uomegadot_min", "uomegadot_min must be <= uomegadot_max");
}

/// Parses scenario text. Only scenario.num_radars, scenario.num_targets and
/// scenario.initial_targets are required; everything else has a default.
inline Scenario parse_scenario(std::string_view text) {
  detail::KvDocument doc;
  try {
    doc = detail::parse_kv_text(text);
  } catch (const detail::KvParseError& e) {
    throw ConfigError("", std::string("parse error: ") + e.what());
  }
  config_impl::Reader r(std::move(doc));
  Scenario s;
  auto& sc = s.scenario;
  try {
    sc.num_radars = r.integer("scenario.num_radars", 0, true);
    sc.num_targets = r.integer("scenario.num_targets", 0, true);
    sc.initial_targets = r.matrix("scenario.initial_targets", true);
    sc.dt_s = r.number("scenario.dt_s", sc.dt_s);
    sc.num_steps = r.integer("scenario.num_steps", sc.num_steps);
    sc.control_period_steps = r.integer("scenario.control_period_steps", sc.control_period_steps);
    sc.accel_noise_std = r.number("scenario.accel_noise_std", sc.accel_noise_std);
    sc.radar_init_square_edge_m = r.number("scenario.radar_init_square_edge_m", sc.radar_init_square_edge_m);
    sc.measurement_model = parse_measurement_kind(r.text("scenario.measurement_model", "ddr"));
    sc.controller = parse_controller_kind(r.text("scenario.controller", "mppi"));
    sc.fim_mode = parse_fim_mode(r.text("scenario.fim_mode", "sfim"));
    const double seed = r.number("scenario.seed", 0.0);
    if (seed < 0 || seed != std::floor(seed) || seed > 9.0e15) throw ConfigError("scenario.seed", "expected a non-negative integer");
    sc.seed = static_cast<std::uint64_t>(seed);

    auto& l = sc.limits;
    l.v_min = r.number("limits.v_min", l.v_min);
    l.v_max = r.number("limits.v_max", l.v_max);
    l.omega_min = r.angle("limits.omega_min", l.omega_min);
    l.omega_max = r.angle("limits.omega_max", l.omega_max);
    l.ua_min = r.number("limits.ua_min", l.ua_min);
    l.ua_max = r.number("limits.ua_max", l.ua_max);
    l.uomegadot_min = r.angle("limits.uomegadot_min", l.uomegadot_min);
    l.uomegadot_max = r.angle("limits.uomegadot_max", l.uomegadot_max);

    auto& rp = s.radar;
    rp.carrier_freq_hz = r.number("radar.carrier_freq_hz", rp.carrier_freq_hz);
    rp.transmit_power_w = r.number("radar.transmit_power_w", rp.transmit_power_w);
    rp.gain_tx = r.number("radar.gain_tx", rp.gain_tx);
    rp.gain_rx = r.number("radar.gain_rx", rp.gain_rx);
    rp.loss = r.number("radar.loss", rp.loss);
    rp.rcs_m2 = r.number("radar.rcs_m2", rp.rcs_m2);
    rp.snr_db = r.number("radar.snr_db", rp.snr_db);
    rp.snr_ref_radius_m = r.number("radar.snr_ref_radius_m", rp.snr_ref_radius_m);

    auto& mpc = s.mpc;
    mpc.discount = r.number("mpc.discount", mpc.discount);
    mpc.horizon_steps = r.integer("mpc.horizon_steps", mpc.horizon_steps);
    mpc.r2t_m = r.number("mpc.r2t_m", mpc.r2t_m);
    mpc.r2r_m = r.number("mpc.r2r_m", mpc.r2r_m);
    mpc.alpha_r2r = r.number("mpc.alpha_r2r", mpc.alpha_r2r);
    mpc.alpha_r2t = r.number("mpc.alpha_r2t", mpc.alpha_r2t);

    auto& mp = s.mppi;
    mp.std_accel = r.number("mppi.std_accel", mp.std_accel);
    mp.std_angaccel = r.angle("mppi.std_angaccel", mp.std_angaccel);
    mp.num_samples = r.integer("mppi.num_samples", mp.num_samples);
    mp.num_subiters = r.integer("mppi.num_subiters", mp.num_subiters);
    mp.temperature = r.number("mppi.temperature", mp.temperature);
    mp.elite_quantile = r.number("mppi.elite_quantile", mp.elite_quantile);

    s.filter.prior_pos_std_m = r.number("filter.prior_pos_std_m", s.filter.prior_pos_std_m);
    s.filter.prior_vel_std_mps = r.number("filter.prior_vel_std_mps", s.filter.prior_vel_std_mps);

    r.reject_unknown();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scenario", e.what());
  }
  validate(s);
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

/// Canonical text form; parse_scenario(to_text(s)) reproduces s exactly.
inline std::string to_text(const Scenario& s) {
  using detail::format_double;
  const auto& sc = s.scenario;
  std::ostringstream o;
  o << "[scenario]\n";
  o << "num_radars = " << sc.num_radars << "\n";
  o << "num_targets = " << sc.num_targets << "\n";
  o << "dt_s = " << format_double(sc.dt_s) << "\n";
  o << "num_steps = " << sc.num_steps << "\n";
  o << "control_period_steps = " << sc.control_period_steps << "\n";
  o << "accel_noise_std = " << format_double(sc.accel_noise_std) << "\n";
  o << "radar_init_square_edge_m = " << format_double(sc.radar_init_square_edge_m) << "\n";
  o << "measurement_model = \"" << to_string(sc.measurement_model) << "\"\n";
  o << "controller = \"" << to_string(sc.controller) << "\"\n";
  o << "fim_mode = \"" << to_string(sc.fim_mode) << "\"\n";
  o << "seed = " << sc.seed << "\n";
  o << "initial_targets = [\n";
  for (Eigen::Index m = 0; m < sc.initial_targets.rows(); ++m) {
    o << "  [";
    for (Eigen::Index c = 0; c < 6; ++c) o << (c ? ", " : "") << format_double(sc.initial_targets(m, c));
    o << "],\n";
  }
  o << "]\n\n[limits]\n";
  const auto& l = sc.limits;
  o << "v_min = " << format_double(l.v_min) << "\n";
  o << "v_max = " << format_double(l.v_max) << "\n";
  o << "omega_min = " << format_double(l.omega_min) << "\n";
  o << "omega_max = " << format_double(l.omega_max) << "\n";
  o << "ua_min = " << format_double(l.ua_min) << "\n";
  o << "ua_max = " << format_double(l.ua_max) << "\n";
  o << "uomegadot_min = " << format_double(l.uomegadot_min) << "\n";
  o << "uomegadot_max = " << format_double(l.uomegadot_max) << "\n";
  const auto& rp = s.radar;
  o << "\n[radar]\n";
  o << "carrier_freq_hz = " << format_double(rp.carrier_freq_hz) << "\n";
  o << "transmit_power_w = " << format_double(rp.transmit_power_w) << "\n";
  o << "gain_tx = " << format_double(rp.gain_tx) << "\n";
  o << "gain_rx = " << format_double(rp.gain_rx) << "\n";
  o << "loss = " << format_double(rp.loss) << "\n";
  o << "rcs_m2 = " << format_double(rp.rcs_m2) << "\n";
  o << "snr_db = " << format_double(rp.snr_db) << "\n";
  o << "snr_ref_radius_m = " << format_double(rp.snr_ref_radius_m) << "\n";
  const auto& mpc = s.mpc;
  o << "\n[mpc]\n";
  o << "discount = " << format_double(mpc.discount) << "\n";
  o << "horizon_steps = " << mpc.horizon_steps << "\n";
  o << "r2t_m = " << format_double(mpc.r2t_m) << "\n";
  o << "r2r_m = " << format_double(mpc.r2r_m) << "\n";
  o << "alpha_r2r = " << format_double(mpc.alpha_r2r) << "\n";
  o << "alpha_r2t = " << format_double(mpc.alpha_r2t) << "\n";
  const auto& mp = s.mppi;
  o << "\n[mppi]\n";
  o << "std_accel = " << format_double(mp.std_accel) << "\n";
  o << "std_angaccel = " << format_double(mp.std_angaccel) << "\n";
  o << "num_samples = " << mp.num_samples << "\n";
  o << "num_subiters = " << mp.num_subiters << "\n";
  o << "temperature = " << format_double(mp.temperature) << "\n";
  o << "elite_quantile = " << format_double(mp.elite_quantile) << "\n";
  o << "\n[filter]\n";
  o << "prior_pos_std_m = " << format_double(s.filter.prior_pos_std_m) << "\n";
  o << "prior_vel_std_mps = " << format_double(s.filter.prior_vel_std_mps) << "\n";
  return o.str();
}

}  // namespace radarplace
