#pragma once

#include "radarplace/ckf.hpp"
#include "radarplace/config.hpp"
#include "radarplace/dynamics.hpp"
#include "radarplace/fim.hpp"
#include "radarplace/mppi.hpp"
#include "radarplace/objective.hpp"
#include "radarplace/parallel.hpp"
#include "radarplace/random.hpp"
#include "radarplace/sensing.hpp"
#include "radarplace/types.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radarplace {

struct StepRecord {
  int step = 0;
  TargetStack truth;
  Vec est_mean;
  Vec cov_diag;
  RadarStack radars;  // after actuation, i.e. where the measurement was taken
  Vec controls;       // applied (pre-clip) first-step controls, [u_a, u_omegadot] per radar
  Vec measurements;   // ordered target-major: m * N + n
  CostBreakdown cost; // plan-mean cost at the most recent planning tick
  double rmse = 0.0;
  double rmse_pos = 0.0;
};

struct TrialTrace {
  std::uint64_t seed = 0;
  RadarStack initial_radars;
  std::vector<StepRecord> steps;
};

/// A trial aborted by a module error, tagged with the step it happened in.
class TrialError : public std::runtime_error {
 public:
  TrialError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Full-state RMSE over all 6M components.
inline double rmse_step(const TargetStack& truth, const Vec& est) {
  if (truth.size() != est.size() || truth.size() == 0) throw std::invalid_argument("rmse_step: dimension mismatch");
  return std::sqrt((truth - est).squaredNorm() / static_cast<double>(truth.size()));
}

/// Position-only RMSE over the 3M position components.
inline double rmse_position(const TargetStack& truth, const Vec& est) {
  if (truth.size() != est.size() || truth.size() == 0) throw std::invalid_argument("rmse_position: dimension mismatch");
  const Eigen::Index M = num_targets(truth);
  double acc = 0.0;
  for (Eigen::Index m = 0; m < M; ++m) acc += (target_position(truth, m) - est.segment<3>(kTargetDim * m)).squaredNorm();
  return std::sqrt(acc / static_cast<double>(3 * M));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Shortest window of the sorted samples holding ceil(0.9 n) values; ties go to the lowest window.
inline Interval hdi_90(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 10) throw std::invalid_argument("hdi_90 needs at least 10 samples");
  std::sort(samples.begin(), samples.end());
  const std::size_t k = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n) - 1e-9));
  Interval best{samples[0], samples[k - 1]};
  for (std::size_t i = 1; i + k <= n; ++i) {
    if (samples[i + k - 1] - samples[i] < best.hi - best.lo) best = {samples[i], samples[i + k - 1]};
  }
  return best;
}

/// hdi_90 where it is defined; the sample range for campaigns smaller than 10 trials.
inline Interval hdi_90_or_range(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  if (samples.size() >= 10) return hdi_90(samples);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return {*lo, *hi};
}

struct EcdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

inline std::vector<EcdfPoint> ecdf(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ecdf needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  std::vector<EcdfPoint> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) out.push_back({samples[i], static_cast<double>(i + 1) / n});
  return out;
}

namespace harness_impl {

// Debug-build check that every step follows transition, predict, plan, actuate, measure, update.
enum class Phase { Transition, Predict, Plan, Actuate, Measure, Update };

class PhaseTracker {
 public:
  void enter(Phase p) {
    assert(valid_successor(p) && "closed-loop step out of order");
    last_ = p;
  }

 private:
  Phase last_ = Phase::Update;

  bool valid_successor(Phase p) const {
    switch (p) {
      case Phase::Transition: return last_ == Phase::Update;
      case Phase::Predict: return last_ == Phase::Transition;
      case Phase::Plan: return last_ == Phase::Predict;
      case Phase::Actuate: return last_ == Phase::Predict || last_ == Phase::Plan;
      case Phase::Measure: return last_ == Phase::Actuate;
      case Phase::Update: return last_ == Phase::Measure;
    }
    return false;
  }
};

}  // namespace harness_impl

/// Radars start uniformly inside a square centered on the origin, heading uniform, at rest.
inline RadarStack initial_radars(const ScenarioConfig& sc, Rng& rng) {
  const double half = 0.5 * sc.radar_init_square_edge_m;
  std::uniform_real_distribution<double> xy(-half, half);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  RadarStack radars = RadarStack::Zero(sc.num_radars, kRadarDim);
  for (int n = 0; n < sc.num_radars; ++n) {
    radars(n, 0) = xy(rng);
    radars(n, 1) = xy(rng);
    radars(n, 3) = wrap_angle(heading(rng));
  }
  return radars;
}

/// Sigma sets aligned with a K-step radar rollout starting now: the current posterior,
/// the one-step prediction, then K - 1 further predictions.
inline std::vector<SigmaSet> horizon_sigma_sets(const GaussianBelief& posterior, const GaussianBelief& predicted,
                                                const TransitionModel& tm, int horizon) {
  std::vector<SigmaSet> sets;
  sets.reserve(static_cast<std::size_t>(horizon + 1));
  sets.push_back(sigma_points(posterior));
  sets.push_back(sigma_points(predicted));
  if (horizon > 1) {
    std::vector<SigmaSet> rest = propagate(predicted, tm, horizon - 1);
    for (SigmaSet& s : rest) sets.push_back(std::move(s));
  }
  return sets;
}

/// One closed-loop episode. The truth always uses the distance-dependent noise model;
/// the filter and the planner use the scenario's measurement_model.
inline TrialTrace run_trial(const Scenario& s, std::uint64_t seed) {
  const ScenarioConfig& sc = s.scenario;
  const int N = sc.num_radars;
  const int K = s.mpc.horizon_steps;
  const TransitionModel tm = build_transition(sc.dt_s, sc.accel_noise_std, sc.num_targets);
  const double gamma = scenario_gamma(s);
  const MeasurementModel truth_model = make_measurement_model(MeasurementKind::DDR, gamma, s.mpc.r2t_m);
  const MeasurementModel belief_model = make_measurement_model(sc.measurement_model, gamma, s.mpc.r2t_m);
  const bool use_mppi = sc.controller == ControllerKind::MPPI;
  const bool use_pfim = sc.fim_mode == FimMode::PFIM;

  Rng init_rng = make_stream(seed, Stream::Init);
  Rng target_rng = make_stream(seed, Stream::Targets);
  Rng meas_rng = make_stream(seed, Stream::Measurements);
  Rng mppi_rng = make_stream(seed, Stream::Mppi);

  TrialTrace trace;
  trace.seed = seed;
  TargetStack truth = sc.initial_target_stack();
  RadarStack radars = initial_radars(sc, init_rng);
  trace.initial_radars = radars;
  GaussianBelief belief = initial_belief(truth, s.filter, init_rng);

  Mat J_current;
  if (use_pfim) J_current = belief.cov.llt().solve(Mat::Identity(belief.dim(), belief.dim()));

  ObjectiveContext ctx;
  ctx.mpc = s.mpc;
  ctx.model = belief_model;
  ctx.mode = sc.fim_mode;
  ctx.limits = sc.limits;
  ctx.dt = sc.dt_s;
  ctx.transition = &tm;

  const ControlPlan fresh = initial_plan(K, N, s.mppi);
  Vec plan_mean = fresh.mean;
  CostBreakdown last_cost;
  harness_impl::PhaseTracker phase;
  trace.steps.reserve(static_cast<std::size_t>(sc.num_steps));

  for (int k = 0; k < sc.num_steps; ++k) {
    try {
      phase.enter(harness_impl::Phase::Transition);
      truth = step_targets(tm, truth, target_rng);

      phase.enter(harness_impl::Phase::Predict);
      const GaussianBelief predicted = predict(belief, tm);

      Vec u = Vec::Zero(kControlDim * N);
      if (use_mppi) {
        if (k % sc.control_period_steps == 0) {
          phase.enter(harness_impl::Phase::Plan);
          const std::vector<SigmaSet> sets = horizon_sigma_sets(belief, predicted, tm, K);
          if (use_pfim) ctx.pfim_init = J_current;
          const auto cost = [&](const Vec& controls) { return total_cost(controls, radars, sets, ctx).total; };
          ControlPlan warm{plan_mean, fresh.cov};
          const ControlPlan result = plan(warm, cost, s.mppi, mppi_rng);
          plan_mean = result.mean;
          last_cost = total_cost(plan_mean, radars, sets, ctx);
        }
        u = plan_mean.head(kControlDim * N);
      }

      phase.enter(harness_impl::Phase::Actuate);
      radars = step_radars(radars, u, sc.dt_s, sc.limits);
      if (use_mppi) plan_mean = shift_plan(plan_mean, N);

      phase.enter(harness_impl::Phase::Measure);
      const Vec z = sample_measurements(truth_model, radars, truth, meas_rng);

      phase.enter(harness_impl::Phase::Update);
      if (use_pfim) J_current = pfim_step_simplified(J_current, tm, expected_jd(sigma_points(predicted), radars, belief_model));
      belief = update(predicted, z, radars, belief_model);

      StepRecord rec;
      rec.step = k;
      rec.truth = truth;
      rec.est_mean = belief.mean;
      rec.cov_diag = belief.cov.diagonal();
      rec.radars = radars;
      rec.controls = u;
      rec.measurements = z;
      rec.cost = last_cost;
      rec.rmse = rmse_step(truth, belief.mean);
      rec.rmse_pos = rmse_position(truth, belief.mean);
      if (!std::isfinite(rec.rmse) || !belief.cov.allFinite()) throw std::runtime_error("filter diverged (non-finite state)");
      trace.steps.push_back(std::move(rec));
    } catch (const TrialError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrialError(k, e.what());
    }
  }
  return trace;
}

struct TrialSummary {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double mean_rmse = 0.0;
  double final_rmse = 0.0;
};

struct CampaignStats {
  std::vector<double> rmse_mean;
  std::vector<double> rmse_pos_mean;
  std::vector<double> hdi_lo;
  std::vector<double> hdi_hi;
  std::vector<EcdfPoint> ecdf;
  int trials_used = 0;
};

struct CampaignResult {
  std::vector<TrialTrace> traces;  // indexed by trial; failed trials keep an empty trace
  std::vector<TrialSummary> summaries;
  CampaignStats stats;
};

/// Per-step statistics over the successful traces, reduced in trial-index order.
inline CampaignStats compute_stats(const std::vector<TrialTrace>& traces, const std::vector<TrialSummary>& summaries) {
  CampaignStats st;
  std::vector<const TrialTrace*> used;
  for (std::size_t i = 0; i < traces.size(); ++i)
    if (summaries[i].ok) used.push_back(&traces[i]);
  st.trials_used = static_cast<int>(used.size());
  if (used.empty()) return st;
  const std::size_t steps = used.front()->steps.size();
  std::vector<double> all;
  all.reserve(steps * used.size());
  std::vector<double> column(used.size());
  for (std::size_t k = 0; k < steps; ++k) {
    double sum = 0.0;
    double sum_pos = 0.0;
    for (std::size_t t = 0; t < used.size(); ++t) {
      column[t] = used[t]->steps[k].rmse;
      sum += column[t];
      sum_pos += used[t]->steps[k].rmse_pos;
    }
    st.rmse_mean.push_back(sum / static_cast<double>(used.size()));
    st.rmse_pos_mean.push_back(sum_pos / static_cast<double>(used.size()));
    const Interval hdi = hdi_90_or_range(column);
    st.hdi_lo.push_back(hdi.lo);
    st.hdi_hi.push_back(hdi.hi);
  }
  for (const TrialTrace* t : used)
    for (const StepRecord& r : t->steps) all.push_back(r.rmse);
  st.ecdf = ecdf(all);
  return st;
}

inline TrialSummary summarize_trial(int index, std::uint64_t seed, const TrialTrace& trace) {
  TrialSummary s;
  s.index = index;
  s.seed = seed;
  s.ok = true;
  double acc = 0.0;
  for (const StepRecord& r : trace.steps) acc += r.rmse;
  s.mean_rmse = trace.steps.empty() ? 0.0 : acc / static_cast<double>(trace.steps.size());
  s.final_rmse = trace.steps.empty() ? 0.0 : trace.steps.back().rmse;
  return s;
}

/// Trials run concurrently; trial i uses seed base_seed + i, so results do not depend
/// on scheduling. Failed trials are reported in the summaries and left out of the stats.
inline CampaignResult run_campaign(const Scenario& s, int trials, std::uint64_t base_seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  CampaignResult out;
  out.traces.resize(static_cast<std::size_t>(trials));
  out.summaries.resize(static_cast<std::size_t>(trials));
  parallel_for(trials, [&](std::ptrdiff_t i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    try {
      out.traces[i] = run_trial(s, seed);
      out.summaries[i] = summarize_trial(static_cast<int>(i), seed, out.traces[i]);
    } catch (const std::exception& e) {
      out.traces[i] = TrialTrace{};
      out.traces[i].seed = seed;
      out.summaries[i].index = static_cast<int>(i);
      out.summaries[i].seed = seed;
      out.summaries[i].ok = false;
      out.summaries[i].error = e.what();
    }
  });
  out.stats = compute_stats(out.traces, out.summaries);
  return out;
}

}  // namespace radarplace
