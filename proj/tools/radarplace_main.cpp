// Batch runner: simulate a scenario campaign and write metrics.json plus per-trial traces.

#include "radarplace/radarplace.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef RADARPLACE_SCENARIO_DIR
#define RADARPLACE_SCENARIO_DIR "scenarios"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<double> parse_triple(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (out.size() != 3) throw std::invalid_argument("expected X,Y,Z but got '" + text + "'");
  return out;
}

int list_scenarios(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".toml") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  // Reference layouts first, in their usual order.
  const std::vector<std::string> preferred = {"3r4t.toml", "6r3t.toml", "4r4t.toml"};
  std::stable_sort(files.begin(), files.end(), [&](const auto& a, const auto& b) {
    auto rank = [&](const std::filesystem::path& p) {
      const auto it = std::find(preferred.begin(), preferred.end(), p.filename().string());
      return static_cast<int>(it - preferred.begin());
    };
    return rank(a) < rank(b);
  });
  for (const auto& path : files) {
    const radarplace::Scenario s = radarplace::load_scenario(path.string());
    const auto& sc = s.scenario;
    std::cout << path.filename().string() << ": " << sc.num_radars << " radars, " << sc.num_targets << " targets, "
              << sc.num_steps << " steps\n";
    for (Eigen::Index m = 0; m < sc.initial_targets.rows(); ++m) {
      std::cout << " ";
      for (Eigen::Index j = 0; j < sc.initial_targets.cols(); ++j)
        std::cout << " " << radarplace::detail::format_double(sc.initial_targets(m, j));
      std::cout << "\n";
    }
  }
  return kExitOk;
}

int probe(const std::optional<radarplace::Scenario>& scenario, const std::string& target_text,
          const std::vector<std::string>& radar_texts) {
  using namespace radarplace;
  if (radar_texts.empty()) throw std::invalid_argument("--probe needs at least one --radar X,Y,Z");
  Scenario s;
  if (scenario) {
    s = *scenario;
  } else {
    s.scenario.num_targets = 1;
  }
  const double gamma = scenario_gamma(s);
  const MeasurementModel mm = make_measurement_model(s.scenario.measurement_model, gamma, s.mpc.r2t_m);
  const std::vector<double> t = parse_triple(target_text);
  TargetStack target = TargetStack::Zero(kTargetDim);
  target.head<3>() << t[0], t[1], t[2];
  RadarStack radars = RadarStack::Zero(static_cast<Eigen::Index>(radar_texts.size()), kRadarDim);
  for (std::size_t n = 0; n < radar_texts.size(); ++n) {
    const std::vector<double> r = parse_triple(radar_texts[n]);
    radars.row(static_cast<Eigen::Index>(n)).head<3>() << r[0], r[1], r[2];
  }
  const Mat J = sfim_multi(target, radars, mm);
  std::printf("%.17g\n", logdet_objective(J, default_logdet_jitter(J)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile radar placement: closed-loop tracking campaigns"};
  std::string scenario_path;
  int trials = 1;
  std::optional<std::uint64_t> seed;
  std::string controller;
  std::string model;
  std::string fim;
  std::string out_dir = "./out";
  bool quiet = false;
  bool list = false;
  std::string scenario_dir = RADARPLACE_SCENARIO_DIR;
  std::string probe_target;
  std::vector<std::string> probe_radars;

  app.add_option("--scenario", scenario_path, "Scenario file")->check(CLI::ExistingFile);
  app.add_option("--trials", trials, "Number of Monte-Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Base seed; trial i uses seed + i (default 0)");
  app.add_option("--controller", controller, "Override controller")->check(CLI::IsMember({"mppi", "stationary"}));
  app.add_option("--model", model, "Override measurement model")->check(CLI::IsMember({"ddr", "ccr"}));
  app.add_option("--fim", fim, "Override FIM used by the planner")->check(CLI::IsMember({"sfim", "pfim"}));
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  app.add_flag("--list-scenarios", list, "Print the shipped scenarios and their initial target states");
  app.add_option("--scenario-dir", scenario_dir, "Directory searched by --list-scenarios");
  app.add_option("--probe", probe_target, "Print the SFIM log-determinant for a target at X,Y,Z");
  app.add_option("--radar", probe_radars, "Radar position X,Y,Z for --probe (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (list) return list_scenarios(scenario_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::optional<radarplace::Scenario> scenario;
  try {
    if (!scenario_path.empty()) {
      scenario = radarplace::load_scenario(scenario_path);
      auto& sc = scenario->scenario;
      if (!controller.empty()) sc.controller = radarplace::parse_controller_kind(controller);
      if (!model.empty()) sc.measurement_model = radarplace::parse_measurement_kind(model);
      if (!fim.empty()) sc.fim_mode = radarplace::parse_fim_mode(fim);
    }
    if (!probe_target.empty()) return probe(scenario, probe_target, probe_radars);
    if (!scenario) {
      std::cerr << "error: --scenario is required\n\n" << app.help();
      return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto thread_limit = radarplace::thread_limit_from_env();
  const std::uint64_t base_seed = seed.value_or(scenario->scenario.seed);
  try {
    const auto& sc = scenario->scenario;
    if (!quiet) {
      std::cerr << "running " << trials << " trial(s): " << sc.num_radars << " radars, " << sc.num_targets
                << " targets, " << sc.num_steps << " steps, controller=" << radarplace::to_string(sc.controller)
                << " model=" << radarplace::to_string(sc.measurement_model)
                << " fim=" << radarplace::to_string(sc.fim_mode) << "\n";
    }
    const auto start = std::chrono::steady_clock::now();
    const radarplace::CampaignResult result = radarplace::run_campaign(*scenario, trials, base_seed);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    radarplace::write_campaign(out_dir, *scenario, result, base_seed);
    int failed = 0;
    for (const auto& t : result.summaries) {
      if (t.ok) continue;
      ++failed;
      std::cerr << "trial " << t.index << " (seed " << t.seed << ") failed: " << t.error << "\n";
    }
    if (!quiet) {
      std::cerr << "done in " << elapsed << " s: " << (trials - failed) << "/" << trials << " trials ok, output in "
                << out_dir << "\n";
    }
    if (failed == trials) return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
