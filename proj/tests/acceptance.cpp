// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero if any fails.
// The directional campaign dominates the runtime (roughly 40 closed-loop trials).

#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace radarplace;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kFimTol = 1e-5;
constexpr double kPfimTol = 1e-8;
constexpr double kKalmanTol = 1e-9;
constexpr double kRoundTripMeanTol = 1e-12;
constexpr double kRoundTripCovTol = 1e-10;
constexpr double kShrinkConsistencyTol = 0.02;
constexpr double kShrinkMaxRho = 0.05;
constexpr double kLqTol = 0.10;
constexpr double kSmokeMinImprovedShare = 0.90;
constexpr double kSmokeMaxPlanSeconds = 0.5;
constexpr double kMaxTrialSeconds = 60.0;
constexpr double kFastCheckSeconds = 1.0;

constexpr int kCampaignSteps = 300;
constexpr int kCampaignTrials = 20;
constexpr int kTailSteps = 100;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Scenario shipped(const std::string& name) { return load_scenario(std::string(RADARPLACE_SCENARIO_DIR) + "/" + name); }

void fim_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const RadarParams rp;
  const double g = gamma_const(rp, noise_power(rp, 4));
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double d = rp_test::uniform(rng, 50, 2000);
    const Vec3 r(rp_test::uniform(rng, -400, 400), rp_test::uniform(rng, -400, 400), 0);
    const Vec3 dir = Vec3(rp_test::random_matrix(3, 1, rng)).normalized();
    const Vec3 t = r + d * dir;
    const Mat oracle = rp_oracle::kay_range_fim(t, {r}, g, 1e-4 * d);
    worst = std::max(worst, rp_test::rel_frobenius(Mat(sfim_single(t, r, g)), oracle));
  }
  const double secs = seconds_since(t0);
  report(worst < kFimTol && secs < kFastCheckSeconds, "fim-oracle-equivalence",
         fmt("max rel err %.3g (tol %.0e), %.3f s", worst, kFimTol, secs));
}

void pfim_forms() {
  const auto t0 = std::chrono::steady_clock::now();
  const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), 1);
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Mat J = rp_test::random_spd(6, rng);
    const Mat B = rp_test::random_matrix(3, 3, rng);
    const Mat JD = embed_velocity(Mat(B * B.transpose()));
    worst = std::max(worst, rp_test::rel_frobenius(pfim_step_raw(J, tm, JD), pfim_step_simplified(J, tm, JD)));
  }
  const double secs = seconds_since(t0);
  report(worst < kPfimTol && secs < kFastCheckSeconds, "recursion-form-equivalence",
         fmt("max rel err %.3g (tol %.0e), %.3f s", worst, kPfimTol, secs));
}

void ckf_linear() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1003);
  TransitionModel tm;
  tm.A = rp_test::random_matrix(6, 6, gen);
  tm.A *= 0.95 / Eigen::EigenSolver<Mat>(tm.A).eigenvalues().cwiseAbs().maxCoeff();
  tm.W = rp_test::random_spd(6, gen, 0.1);
  const Mat C = rp_test::random_matrix(3, 6, gen);
  const Mat R = rp_test::random_spd(3, gen, 0.2);
  const Mat Lw = tm.W.llt().matrixL();
  const Mat Lr = R.llt().matrixL();
  Rng rng = make_stream(1003, Stream::Test);
  Vec x = rp_test::random_matrix(6, 1, gen);
  GaussianBelief ckf{Vec::Zero(6), Mat::Identity(6, 6) * 4.0};
  rp_oracle::KalmanState kf{ckf.mean, ckf.cov};
  double worst_mean = 0.0;
  double worst_cov = 0.0;
  for (int k = 0; k < 100; ++k) {
    x = tm.A * x + Lw * standard_normal(6, rng);
    const Vec z = C * x + Lr * standard_normal(3, rng);
    ckf = cubature_update(predict(ckf, tm), z, [&C](const Vec& s) { return Vec(C * s); }, R);
    kf = rp_oracle::kalman_update(rp_oracle::kalman_predict(kf, tm.A, tm.W), z, C, R);
    worst_mean = std::max(worst_mean, (ckf.mean - kf.mean).norm() / std::max(kf.mean.norm(), 1.0));
    worst_cov = std::max(worst_cov, rp_test::rel_frobenius(ckf.cov, kf.cov));
  }
  const double secs = seconds_since(t0);
  report(worst_mean < kKalmanTol && worst_cov < kKalmanTol && secs < kFastCheckSeconds, "ckf-linear-exactness",
         fmt("max mean err %.3g, max cov err %.3g (tol 1e-09), %.3f s", worst_mean, worst_cov, secs));
}

void cubature_round_trip() {
  std::mt19937_64 rng(1004);
  double worst_mean = 0.0;
  double worst_cov = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index d = 1 + i % 24;
    GaussianBelief b{rp_test::random_matrix(d, 1, rng) * 100.0, rp_test::random_spd(d, rng) * 50.0};
    const SigmaSet s = sigma_points(b);
    worst_mean = std::max(worst_mean, (s.mean() - b.mean).norm() / b.mean.norm());
    worst_cov = std::max(worst_cov, rp_test::rel_frobenius(scatter(s), b.cov));
  }
  report(worst_mean < kRoundTripMeanTol && worst_cov < kRoundTripCovTol, "cubature-round-trip",
         fmt("max mean err %.3g (tol 1e-12), max cov err %.3g (tol 1e-10)", worst_mean, worst_cov));
}

void shrinkage() {
  std::mt19937_64 gen(1005);
  bool pd = true;
  for (int i = 0; i < 100; ++i) {
    const ShrunkCovariance lw = ledoit_wolf(rp_test::random_matrix(2, 3, gen), Vec::Constant(2, 0.5));
    pd = pd && Eigen::LLT<Mat>(lw.cov).info() == Eigen::Success &&
         Eigen::SelfAdjointEigenSolver<Mat>(lw.cov).eigenvalues().minCoeff() > 0.0;
  }
  const Eigen::Vector4d diag(1.0, 4.0, 0.25, 2.0);
  Rng rng = make_stream(1005, Stream::Test);
  const int n = 100000;
  Mat X(n, 4);
  for (int i = 0; i < n; ++i) X.row(i) = (diag.cwiseSqrt().array() * standard_normal(4, rng).array()).matrix().transpose();
  const ShrunkCovariance lw = ledoit_wolf(X, Vec::Constant(n, 1.0 / n));
  const double err = rp_test::rel_frobenius(lw.cov, Mat(diag.asDiagonal()));
  report(pd && err < kShrinkConsistencyTol && lw.shrinkage < kShrinkMaxRho, "shrinkage-properties",
         std::string(pd ? "PD on all n=2,p=3 draws" : "non-PD estimate on n=2,p=3") +
             fmt(", n=1e5 rel err %.4f (tol 0.02), rho %.4f (max 0.05)", err, lw.shrinkage));
}

void mppi_sanity() {
  // Constant-control double integrator.
  const double p0 = 0.0, goal = 10.0, dt = 0.1, rho = 0.01;
  const int K = 20;
  const double u_star = rp_oracle::lq_optimal_constant_control(p0, goal, dt, K, rho);
  const auto lq_cost = [&](const Vec& u) {
    double p = p0, v = 0.0;
    for (int k = 0; k < K; ++k) {
      p += v * dt + 0.5 * dt * dt * u[0];
      v += dt * u[0];
    }
    return (p - goal) * (p - goal) + rho * K * u[0] * u[0];
  };
  Rng lq_rng = make_stream(1006, Stream::Test);
  const ControlPlan lq = plan(ControlPlan{Vec::Zero(1), Mat::Identity(1, 1) * 9.0}, lq_cost, MppiParams{}, lq_rng);
  const double lq_err = std::abs(lq.mean[0] - u_star) / std::abs(u_star);

  // Radar smoke scenario, one planning tick per seed.
  const Scenario s = shipped("smoke.toml");
  const ScenarioConfig& sc = s.scenario;
  const TransitionModel tm = build_transition(sc.dt_s, sc.accel_noise_std, sc.num_targets);
  ObjectiveContext ctx;
  ctx.mpc = s.mpc;
  ctx.model = make_measurement_model(sc.measurement_model, scenario_gamma(s), s.mpc.r2t_m);
  ctx.limits = sc.limits;
  ctx.dt = sc.dt_s;
  ctx.transition = &tm;
  const ControlPlan fresh = initial_plan(s.mpc.horizon_steps, sc.num_radars, s.mppi);
  int improved = 0;
  double slowest = 0.0;
  const int runs = 50;
  for (int seed = 0; seed < runs; ++seed) {
    Rng init = make_stream(static_cast<std::uint64_t>(seed), Stream::Init);
    Rng mppi_rng = make_stream(static_cast<std::uint64_t>(seed), Stream::Mppi);
    const RadarStack radars = initial_radars(sc, init);
    const GaussianBelief belief = initial_belief(sc.initial_target_stack(), s.filter, init);
    const auto sets = horizon_sigma_sets(belief, predict(belief, tm), tm, s.mpc.horizon_steps);
    const auto cost = [&](const Vec& u) { return total_cost(u, radars, sets, ctx).total; };
    const auto t0 = std::chrono::steady_clock::now();
    const ControlPlan out = plan(fresh, cost, s.mppi, mppi_rng);
    slowest = std::max(slowest, seconds_since(t0));
    if (cost(out.mean) <= cost(fresh.mean)) ++improved;
  }
  const double share = static_cast<double>(improved) / runs;
  report(lq_err < kLqTol && share >= kSmokeMinImprovedShare && slowest < kSmokeMaxPlanSeconds, "mppi-sanity",
         fmt("LQ rel err %.4f (tol 0.10); smoke improved %.0f%% of 50 (min 90%%); slowest plan %.3f s (max 0.5)", lq_err,
             100.0 * share, slowest));
}

struct CampaignRun {
  CampaignResult result;
  double seconds_per_trial = 0.0;
};

CampaignRun campaign(Scenario s, ControllerKind controller, MeasurementKind model) {
  s.scenario.num_steps = kCampaignSteps;
  s.scenario.controller = controller;
  s.scenario.measurement_model = model;
  const auto t0 = std::chrono::steady_clock::now();
  CampaignRun run;
  run.result = run_campaign(s, kCampaignTrials, 0);
  // Trials share the machine's cores, so normalize wall time by the number run per core.
  const double per_core = std::ceil(static_cast<double>(kCampaignTrials) / worker_count());
  run.seconds_per_trial = seconds_since(t0) / per_core;
  if (const char* dir = std::getenv("RADARPLACE_ACCEPTANCE_OUT")) {
    const std::string name = std::string(to_string(controller)) + "_" + std::string(to_string(model));
    write_campaign(fs::path(dir) / name, s, run.result, 0);
  }
  return run;
}

double mean_over_steps(const std::vector<double>& v, std::size_t from = 0) {
  double acc = 0.0;
  for (std::size_t k = from; k < v.size(); ++k) acc += v[k];
  return acc / static_cast<double>(v.size() - from);
}

void directional_and_tail() {
  const Scenario s = shipped("3r4t.toml");
  const CampaignRun stationary = campaign(s, ControllerKind::Stationary, MeasurementKind::DDR);
  const CampaignRun ddr = campaign(s, ControllerKind::MPPI, MeasurementKind::DDR);
  const CampaignRun ccr = campaign(s, ControllerKind::MPPI, MeasurementKind::CCR);
  const bool complete = stationary.result.stats.trials_used == kCampaignTrials &&
                        ddr.result.stats.trials_used == kCampaignTrials && ccr.result.stats.trials_used == kCampaignTrials;

  const double r_st = mean_over_steps(stationary.result.stats.rmse_mean);
  const double r_ddr = mean_over_steps(ddr.result.stats.rmse_mean);
  const double r_ccr = mean_over_steps(ccr.result.stats.rmse_mean);
  const double slowest = std::max(ddr.seconds_per_trial, ccr.seconds_per_trial);
  report(complete && r_ddr < r_st && r_ddr < r_ccr && slowest < kMaxTrialSeconds, "directional-rmse",
         fmt("mean RMSE mppi+ddr %.3f, stationary %.3f, ", r_ddr, r_st) +
             fmt("mppi+ccr %.3f; %.1f s per MPPI trial (max 60)", r_ccr, slowest));

  const std::size_t from = static_cast<std::size_t>(kCampaignSteps - kTailSteps);
  const double tail_ddr = mean_over_steps(ddr.result.stats.hdi_hi, from);
  const double tail_ccr = mean_over_steps(ccr.result.stats.hdi_hi, from);
  report(complete && tail_ddr < tail_ccr, "tail-hdi",
         fmt("upper 90%% HDI over last 100 steps: mppi+ddr %.3f, mppi+ccr %.3f", tail_ddr, tail_ccr));
}

void determinism() {
  const Scenario s = shipped("smoke.toml");
  const fs::path root = fs::temp_directory_path() / ("radarplace_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  write_campaign(root / "a", s, run_campaign(s, 3, 17), 17);
  write_campaign(root / "b", s, run_campaign(s, 3, 17), 17);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  int compared = 0;
  bool same = true;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const std::string a = slurp(entry.path());
    same = same && !a.empty() && a == slurp(root / "b" / entry.path().filename());
    ++compared;
  }
  fs::remove_all(root);
  report(same && compared == 4, "determinism", fmt("%.0f output files compared byte for byte", compared));
}

void penalties() {
  std::mt19937_64 rng(1010);
  MpcParams mpc;
  mpc.r2t_m = 40.0;
  mpc.r2r_m = 30.0;
  int mismatches = 0;
  long violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 2 + trial % 5;
    const int M = 1 + trial % 3;
    const int K = 3;
    RadarStack radars = RadarStack::Zero(N, kRadarDim);
    for (int n = 0; n < N; ++n) {
      radars(n, 0) = rp_test::uniform(rng, -60, 60);
      radars(n, 1) = rp_test::uniform(rng, -60, 60);
      radars(n, 3) = rp_test::uniform(rng, -3, 3);
      radars(n, 4) = rp_test::uniform(rng, 0, 20);
    }
    Vec controls(2 * N * K);
    for (Eigen::Index i = 0; i < controls.size(); ++i) controls[i] = rp_test::uniform(rng, -25, 25);
    const TransitionModel tm = build_transition(0.1, std::sqrt(10.0), M);
    GaussianBelief b{Vec(6 * M), rp_test::random_spd(6 * M, rng, 1.0) * 20.0};
    for (int m = 0; m < M; ++m)
      b.mean.segment<6>(6 * m) << rp_test::uniform(rng, -50, 50), rp_test::uniform(rng, -50, 50), 10, 0, 0, 0;
    const auto sets = horizon_sigma_sets(b, predict(b, tm), tm, K);
    const auto traj = rollout_radars(radars, controls, 0.1, KinematicLimits{});
    const double r2t = r2t_penalty(traj, sets, mpc);
    const double r2r = r2r_penalty(traj, mpc);
    if (r2t != rp_oracle::brute_r2t(traj, sets, mpc.r2t_m, mpc.discount)) ++mismatches;
    if (r2r != rp_oracle::brute_r2r(traj, mpc.r2r_m, mpc.discount)) ++mismatches;
    violations += (r2t > 0.0) + (r2r > 0.0);
  }
  report(mismatches == 0, "penalty-correctness",
         fmt("%.0f mismatches over 100 configurations (%.0f nonzero penalties)", mismatches, static_cast<double>(violations)));
}

}  // namespace

int main() {
  const auto guard = thread_limit_from_env();
  fim_oracle();
  pfim_forms();
  ckf_linear();
  cubature_round_trip();
  shrinkage();
  mppi_sanity();
  determinism();
  penalties();
  directional_and_tail();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
