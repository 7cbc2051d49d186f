#pragma once

// Output files of a campaign.
//
// trial_<index>.csv, one row per step, columns in this order:
//   step, rmse, rmse_pos,
//   truth_<m>_{x,y,z,vx,vy,vz}       for each target m
//   est_<m>_{x,y,z,vx,vy,vz}         CKF posterior mean
//   var_<m>_{x,y,z,vx,vy,vz}         CKF posterior covariance diagonal
//   radar_<n>_{x,y,z,theta,v,omega}  radar state after actuation
//   u_<n>_{a,omegadot}               commanded controls
//   z_<m>_<n>                        range measurement of target m by radar n
//   cost_total, cost_traj, cost_r2r, cost_r2t
// Numbers use the shortest representation that round-trips to the same double.
//
// metrics.json holds per-step rmse_mean / rmse_pos_mean / hdi_lo / hdi_hi, the ECDF of all
// (trial, step) RMSE values, a config echo and a per-trial summary.

#include "radarplace/config.hpp"
#include "radarplace/detail/kv_text.hpp"
#include "radarplace/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace radarplace {

inline std::vector<std::string> trace_columns(int num_targets, int num_radars) {
  static const char* state_names[] = {"x", "y", "z", "vx", "vy", "vz"};
  static const char* radar_names[] = {"x", "y", "z", "theta", "v", "omega"};
  std::vector<std::string> cols = {"step", "rmse", "rmse_pos"};
  for (const char* prefix : {"truth", "est", "var"})
    for (int m = 0; m < num_targets; ++m)
      for (const char* s : state_names) cols.push_back(std::string(prefix) + "_" + std::to_string(m) + "_" + s);
  for (int n = 0; n < num_radars; ++n)
    for (const char* s : radar_names) cols.push_back("radar_" + std::to_string(n) + "_" + s);
  for (int n = 0; n < num_radars; ++n) {
    cols.push_back("u_" + std::to_string(n) + "_a");
    cols.push_back("u_" + std::to_string(n) + "_omegadot");
  }
  for (int m = 0; m < num_targets; ++m)
    for (int n = 0; n < num_radars; ++n) cols.push_back("z_" + std::to_string(m) + "_" + std::to_string(n));
  for (const char* c : {"cost_total", "cost_traj", "cost_r2r", "cost_r2t"}) cols.emplace_back(c);
  return cols;
}

inline void write_trace_csv(std::ostream& out, const TrialTrace& trace, int num_targets, int num_radars) {
  using detail::format_double;
  const auto cols = trace_columns(num_targets, num_radars);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const StepRecord& r : trace.steps) {
    out << r.step << "," << format_double(r.rmse) << "," << format_double(r.rmse_pos);
    auto put = [&](double v) { out << "," << format_double(v); };
    for (Eigen::Index i = 0; i < r.truth.size(); ++i) put(r.truth[i]);
    for (Eigen::Index i = 0; i < r.est_mean.size(); ++i) put(r.est_mean[i]);
    for (Eigen::Index i = 0; i < r.cov_diag.size(); ++i) put(r.cov_diag[i]);
    for (Eigen::Index n = 0; n < r.radars.rows(); ++n)
      for (Eigen::Index j = 0; j < kRadarDim; ++j) put(r.radars(n, j));
    for (Eigen::Index i = 0; i < r.controls.size(); ++i) put(r.controls[i]);
    for (Eigen::Index i = 0; i < r.measurements.size(); ++i) put(r.measurements[i]);
    put(r.cost.total);
    put(r.cost.traj);
    put(r.cost.r2r);
    put(r.cost.r2t);
    out << "\n";
  }
}

/// Reads back the columns written by write_trace_csv (header row skipped).
inline std::vector<std::vector<double>> read_trace_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string trace_filename(int index) { return "trial_" + std::to_string(index) + ".csv"; }

inline nlohmann::ordered_json metrics_json(const Scenario& s, const CampaignResult& result, std::uint64_t base_seed) {
  nlohmann::ordered_json j;
  j["controller"] = std::string(to_string(s.scenario.controller));
  j["measurement_model"] = std::string(to_string(s.scenario.measurement_model));
  j["fim_mode"] = std::string(to_string(s.scenario.fim_mode));
  j["num_radars"] = s.scenario.num_radars;
  j["num_targets"] = s.scenario.num_targets;
  j["num_steps"] = s.scenario.num_steps;
  j["trials"] = static_cast<int>(result.summaries.size());
  j["trials_used"] = result.stats.trials_used;
  j["base_seed"] = base_seed;
  j["rmse_mean"] = result.stats.rmse_mean;
  j["rmse_pos_mean"] = result.stats.rmse_pos_mean;
  j["hdi_lo"] = result.stats.hdi_lo;
  j["hdi_hi"] = result.stats.hdi_hi;
  auto ecdf_json = nlohmann::ordered_json::array();
  for (const EcdfPoint& p : result.stats.ecdf) ecdf_json.push_back({p.value, p.fraction});
  j["ecdf"] = std::move(ecdf_json);
  auto trials = nlohmann::ordered_json::array();
  for (const TrialSummary& t : result.summaries) {
    nlohmann::ordered_json e;
    e["index"] = t.index;
    e["seed"] = t.seed;
    e["ok"] = t.ok;
    if (t.ok) {
      e["mean_rmse"] = t.mean_rmse;
      e["final_rmse"] = t.final_rmse;
      e["trace"] = trace_filename(t.index);
    } else {
      e["error"] = t.error;
    }
    trials.push_back(std::move(e));
  }
  j["per_trial"] = std::move(trials);
  j["config"] = to_text(s);
  return j;
}

/// Writes metrics.json and one trace per successful trial into dir (created if needed).
inline void write_campaign(const std::filesystem::path& dir, const Scenario& s, const CampaignResult& result,
                           std::uint64_t base_seed) {
  std::filesystem::create_directories(dir);
  for (const TrialSummary& t : result.summaries) {
    if (!t.ok) continue;
    std::ofstream f(dir / trace_filename(t.index), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / trace_filename(t.index)).string());
    write_trace_csv(f, result.traces[static_cast<std::size_t>(t.index)], s.scenario.num_targets, s.scenario.num_radars);
  }
  std::ofstream f(dir / "metrics.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (dir / "metrics.json").string());
  f << metrics_json(s, result, base_seed).dump(1) << "\n";
}

}  // namespace radarplace
