#include "auvloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "auvloc/error.hpp"
#include "log.hpp"

namespace auvloc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..n-1) over a few threads. Each unit owns its output slot and its
// random stream, so the result does not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ValidationError, field + ": " + what);
}

double mean_squared(const Vec3& estimate, const Vec3& truth) {
  return (estimate - truth).squaredNorm() / 3.0;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 40; ++i) t.push_back(0.25 * i);
  return t;
}

std::vector<double> thresholds_of(const ScenarioConfig& cfg) {
  return cfg.cdf_thresholds.empty() ? default_thresholds() : cfg.cdf_thresholds;
}

int plan_length(const ScenarioConfig& cfg) {
  return static_cast<int>(cfg.trajectory->plan.steps.size());
}

bool is_dropped(const TrajectorySpec& spec, int step) {
  return std::find(spec.dropped_steps.begin(), spec.dropped_steps.end(), step) !=
         spec.dropped_steps.end();
}

// Truth states x_0..x_total. Steps at or after `drift_from` follow the
// propulsion-failure process x' = F x + w; earlier ones follow the plan.
std::vector<StateVector> simulate_truth(const ScenarioConfig& cfg, const KalmanModel& model,
                                        int total_steps, std::optional<int> drift_from,
                                        Rng& rng) {
  const auto& spec = *cfg.trajectory;
  std::vector<StateVector> truth;
  truth.reserve(static_cast<std::size_t>(total_steps) + 1);
  StateVector x;
  x << spec.initial_position, spec.initial_velocity;
  truth.push_back(x);
  for (int k = 0; k < total_steps; ++k) {
    if (drift_from && k >= *drift_from) {
      x = model.f * x;
    } else {
      if (k >= plan_length(cfg)) {
        throw Error(ErrorCode::PlanExhausted,
                    "navigation plan ends at step " + std::to_string(plan_length(cfg)));
      }
      x = model.f * x + model.g * spec.plan.steps[static_cast<std::size_t>(k)].accel;
    }
    if (spec.truth_process_noise) x += sample_gaussian(model.q, rng);
    truth.push_back(x);
  }
  return truth;
}

struct FilterRun {
  std::vector<StepRecord> steps;
  int failures = 0;
};

// Algorithm loop over steps 0..last_step: observe, solve, predict, update
// (or keep the prior when no packet arrived).
FilterRun run_filter(const ScenarioConfig& cfg, const KalmanModel& model,
                     const std::vector<StateVector>& truth, int last_step, Rng& obs_rng) {
  const auto& spec = *cfg.trajectory;
  FilterRun run;
  run.steps.reserve(static_cast<std::size_t>(last_step) + 1);
  for (int k = 0; k <= last_step; ++k) {
    StepRecord rec;
    rec.time = k * cfg.dt;
    rec.truth = truth[static_cast<std::size_t>(k)];
    if (k == 0 || !is_dropped(spec, k)) {
      const auto obs = make_observation(rec.truth.head<3>(), cfg.buoys, cfg.acoustic, obs_rng,
                                        rec.time);
      if (auto fix = estimate_position(obs, cfg.buoys, cfg.acoustic, cfg.solver)) {
        rec.tdoa_fix = fix->position;
      } else {
        ++run.failures;
      }
    }
    if (k == 0) {
      if (!rec.tdoa_fix) {
        throw Error(ErrorCode::NoRealRoot, "no position fix available to start the filter");
      }
      rec.filtered = initial_state(*rec.tdoa_fix, rec.time, cfg.initial_cov);
      rec.updated = true;
    } else {
      const auto& u = spec.plan.steps[static_cast<std::size_t>(k - 1)].accel;
      const GaussianState prior = predict(run.steps.back().filtered, model, ControlInput{u});
      if (rec.tdoa_fix) {
        rec.filtered = update(prior, model, *rec.tdoa_fix);
        rec.updated = true;
      } else {
        rec.filtered = prior;
      }
    }
    run.steps.push_back(std::move(rec));
  }
  return run;
}

// Per-step MSE averaged over runs, skipping runs without a value.
std::vector<SeriesPoint> mse_series(const std::vector<FilterRun>& runs) {
  const std::size_t n_steps = runs.front().steps.size();
  std::vector<SeriesPoint> out(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    double tdoa_sum = 0.0, filt_sum = 0.0;
    int tdoa_n = 0;
    for (const auto& run : runs) {
      const auto& s = run.steps[k];
      const Vec3 truth = s.truth.head<3>();
      filt_sum += mean_squared(s.filtered.position(), truth);
      if (s.tdoa_fix) {
        tdoa_sum += mean_squared(*s.tdoa_fix, truth);
        ++tdoa_n;
      }
    }
    out[k].time = runs.front().steps[k].time;
    out[k].mse_filtered = filt_sum / static_cast<double>(runs.size());
    out[k].mse_tdoa = tdoa_n > 0 ? tdoa_sum / tdoa_n : kNaN;
  }
  return out;
}

void fill_tracking_metrics(const ScenarioConfig& cfg, const std::vector<FilterRun>& runs,
                           Metrics& m) {
  std::vector<double> filtered_mae, tdoa_mae;
  for (const auto& run : runs) {
    m.failures += run.failures;
    for (const auto& s : run.steps) {
      const Vec3 truth = s.truth.head<3>();
      if (s.tdoa_fix) tdoa_mae.push_back(component_mae(*s.tdoa_fix, truth));
      if (s.updated) filtered_mae.push_back(component_mae(s.filtered.position(), truth));
    }
  }
  m.evaluated = static_cast<int>(filtered_mae.size());
  m.mae = mean(filtered_mae);
  m.mae_tdoa = mean(tdoa_mae);
  m.median_mae = median(filtered_mae);
  m.cdf = compute_cdf(filtered_mae, thresholds_of(cfg));
  m.mse_series = mse_series(runs);
}

}  // namespace

std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::Localization: return "localize";
    case ExperimentKind::Tracking: return "track";
    case ExperimentKind::Search: return "search";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  try {
    buoys.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }
  if (buoys.size() < 5) {
    invalid("buoys", "need at least 5 buoys (reference + 4 auxiliaries), got " +
                         std::to_string(buoys.size()));
  }
  acoustic.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) invalid("dt_seconds", "must be positive");
  try {
    (void)build_model(dt, process_noise, Mat3::Identity());
  } catch (const Error& e) {
    invalid("process_noise", e.what());
  }
  try {
    (void)build_model(dt, StateMatrix::Zero(), measurement_noise);
  } catch (const Error& e) {
    invalid("measurement_noise", e.what());
  }
  if (!(initial_cov.position_var > 0.0) || !(initial_cov.velocity_var > 0.0)) {
    invalid("initial_covariance", "variances must be positive");
  }
  if (grid) {
    for (int c : grid->counts) {
      if (c < 1) invalid("grid.counts", "every count must be >= 1");
    }
    if (!grid->origin.allFinite() || !grid->spacing.allFinite()) {
      invalid("grid", "non-finite origin or spacing");
    }
  }
  if (trajectory) {
    const auto& plan = trajectory->plan.steps;
    if (plan.empty()) invalid("trajectory.plan", "must contain at least one step");
    try {
      trajectory->plan.validate(dt);
    } catch (const Error& e) {
      invalid("trajectory.plan", e.what());
    }
    if (std::abs(plan.front().time) > 1e-9 * dt) invalid("trajectory.plan", "must start at t = 0");
    for (int k : trajectory->dropped_steps) {
      if (k < 1 || k > static_cast<int>(plan.size())) {
        invalid("trajectory.dropped_steps", "step " + std::to_string(k) + " out of range");
      }
    }
    if (!trajectory->initial_position.allFinite() || !trajectory->initial_velocity.allFinite()) {
      invalid("trajectory", "non-finite initial state");
    }
  }
  if (search) {
    if (!trajectory) invalid("search", "requires a trajectory");
    const double end = static_cast<double>(trajectory->plan.steps.size()) * dt;
    if (!(search->disconnect_time >= 0.0) || search->disconnect_time > end) {
      invalid("search.disconnect_time_s", "must lie within the trajectory");
    }
    if (!(search->confidence > 0.0 && search->confidence < 1.0)) {
      invalid("search.confidence", "must lie in (0, 1)");
    }
    if (!(search->radius_scale > 0.0)) invalid("search.radius_scale", "must be positive");
    if (!(search->tolerance_factor >= 1.0)) invalid("search.tolerance_factor", "must be >= 1");
    if (search->horizon_steps && *search->horizon_steps < 0) {
      invalid("search.horizon_steps", "must be >= 0");
    }
  }
  if (monte_carlo_runs < 1) invalid("monte_carlo_runs", "must be >= 1");
  for (std::size_t i = 0; i < cdf_thresholds.size(); ++i) {
    if (!(cdf_thresholds[i] >= 0.0) || (i > 0 && cdf_thresholds[i] < cdf_thresholds[i - 1])) {
      invalid("cdf_thresholds_m", "must be non-negative and ascending");
    }
  }
}

KalmanModel ScenarioConfig::model() const {
  return build_model(dt, process_noise, measurement_noise);
}

std::vector<Vec3> generate_grid(const GridSpec& spec) {
  const auto [nx, ny, nz] = spec.counts;
  if (nx < 1 || ny < 1 || nz < 1) {
    throw Error(ErrorCode::PreconditionViolated, "grid counts must be >= 1");
  }
  const double z_step = spec.z_descending ? -std::abs(spec.spacing.z()) : spec.spacing.z();
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        points.push_back(spec.origin +
                         Vec3(i * spec.spacing.x(), j * spec.spacing.y(), k * z_step));
      }
    }
  }
  return points;
}

std::vector<CdfPoint> compute_cdf(std::span<const double> errors,
                                  std::span<const double> thresholds) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "compute_cdf: no errors");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::PreconditionViolated, "compute_cdf: thresholds must be ascending");
  }
  std::vector<double> sorted(errors.begin(), errors.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<CdfPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.push_back({t, static_cast<double>(count) / n});
  }
  return out;
}

double component_mae(const Vec3& estimate, const Vec3& truth) {
  return (estimate - truth).cwiseAbs().mean();
}

std::vector<StateVector> planned_trajectory(const TrajectorySpec& spec,
                                            const KalmanModel& model) {
  std::vector<StateVector> out;
  StateVector x;
  x << spec.initial_position, spec.initial_velocity;
  out.push_back(x);
  for (const auto& step : spec.plan.steps) {
    x = model.f * x + model.g * step.accel;
    out.push_back(x);
  }
  return out;
}

Mat3 calibrate_measurement_noise(const ScenarioConfig& cfg, int samples) {
  if (samples < 1) throw Error(ErrorCode::PreconditionViolated, "calibration needs samples");
  std::vector<Vec3> points;
  if (cfg.trajectory) {
    const auto model = build_model(cfg.dt, cfg.process_noise, Mat3::Identity());
    for (const auto& x : planned_trajectory(*cfg.trajectory, model)) points.push_back(x.head<3>());
  } else if (cfg.grid) {
    points = generate_grid(*cfg.grid);
  } else {
    throw Error(ErrorCode::ValidationError,
                "measurement_noise: calibration needs a trajectory or a grid");
  }
  Vec3 sum_sq = Vec3::Zero();
  int used = 0;
  for (int s = 0; s < samples; ++s) {
    const Vec3& p = points[static_cast<std::size_t>(s) % points.size()];
    Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(s),
                          stream_purpose::kCalibration);
    const auto obs = make_observation(p, cfg.buoys, cfg.acoustic, rng);
    if (auto fix = estimate_position(obs, cfg.buoys, cfg.acoustic, cfg.solver)) {
      sum_sq += (fix->position - p).cwiseAbs2();
      ++used;
    }
  }
  if (used == 0) throw Error(ErrorCode::NoRealRoot, "calibration: every fix failed");
  const Vec3 var = (sum_sq / used).cwiseMax(1e-6);
  log::get()->info("calibrated measurement noise from {} fixes: diag({}, {}, {}) m^2", used,
                   var.x(), var.y(), var.z());
  return var.asDiagonal();
}

RunRecord run_localization_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  if (!cfg.grid) invalid("grid", "localization experiment requires a grid");
  const auto grid = generate_grid(*cfg.grid);

  RunRecord record;
  record.kind = ExperimentKind::Localization;
  record.points.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    auto& out = record.points[i];
    out.truth = grid[i];
    Rng rng = make_stream(cfg.seed, i, stream_purpose::kLocalization);
    const auto obs = make_observation(grid[i], cfg.buoys, cfg.acoustic, rng);
    try {
      out.fix = solve_primary(obs, cfg.buoys, cfg.acoustic, cfg.solver);
      out.mae = component_mae(out.fix->position, out.truth);
      out.error_norm = (out.fix->position - out.truth).norm();
    } catch (const Error& e) {
      out.mae = kNaN;
      out.error_norm = kNaN;
      log::get()->debug("grid point {} failed: {}", i, e.what());
    }
  });

  std::vector<double> maes;
  auto& m = record.metrics;
  for (const auto& p : record.points) {
    if (p.fix) {
      maes.push_back(p.mae);
    } else {
      ++m.failures;
    }
  }
  if (m.failures > 0) log::get()->warn("{} of {} grid points failed", m.failures, grid.size());
  m.evaluated = static_cast<int>(maes.size());
  m.mae = mean(maes);
  m.mae_tdoa = m.mae;
  m.median_mae = median(maes);
  m.detection_time = kNaN;
  m.cdf = compute_cdf(maes, thresholds_of(cfg));
  return record;
}

RunRecord run_tracking_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  if (!cfg.trajectory) invalid("trajectory", "tracking experiment requires a trajectory");
  const KalmanModel model = cfg.model();
  const int steps = plan_length(cfg);

  std::vector<FilterRun> runs(static_cast<std::size_t>(cfg.monte_carlo_runs));
  parallel_for(runs.size(), [&](std::size_t r) {
    Rng truth_rng = make_stream(cfg.seed, r, stream_purpose::kTruth);
    Rng obs_rng = make_stream(cfg.seed, r, stream_purpose::kTracking);
    const auto truth = simulate_truth(cfg, model, steps, std::nullopt, truth_rng);
    runs[r] = run_filter(cfg, model, truth, steps, obs_rng);
  });

  RunRecord record;
  record.kind = ExperimentKind::Tracking;
  record.metrics.detection_time = kNaN;
  fill_tracking_metrics(cfg, runs, record.metrics);
  record.steps = std::move(runs.front().steps);
  return record;
}

RunRecord run_search_experiment(const ScenarioConfig& cfg) {
  cfg.validate();
  if (!cfg.search) invalid("search.disconnect_time_s", "search experiment requires it");
  const auto& search = *cfg.search;
  const KalmanModel model = cfg.model();
  const int plan_steps = plan_length(cfg);
  const int last_packet = static_cast<int>(std::floor(search.disconnect_time / cfg.dt + 1e-9));
  const int horizon = search.horizon_steps.value_or(plan_steps - last_packet);
  const int total = last_packet + horizon;
  const bool drift = search.scenario == Scenario::PropulsionFailure;
  if (!drift && total > plan_steps) {
    throw Error(ErrorCode::PlanExhausted, "search horizon extends past the navigation plan");
  }

  struct SearchRun {
    FilterRun filter;
    std::vector<double> divergence;
    std::vector<bool> covered;
  };
  std::vector<SearchRun> runs(static_cast<std::size_t>(cfg.monte_carlo_runs));
  parallel_for(runs.size(), [&](std::size_t r) {
    Rng truth_rng = make_stream(cfg.seed, r, stream_purpose::kTruth);
    Rng obs_rng = make_stream(cfg.seed, r, stream_purpose::kTracking);
    const auto truth = simulate_truth(cfg, model, total,
                                      drift ? std::optional<int>(last_packet) : std::nullopt,
                                      truth_rng);
    auto& out = runs[r];
    out.filter = run_filter(cfg, model, truth, last_packet, obs_rng);

    const DisconnectionEvent event{last_packet * cfg.dt, out.filter.steps.back().filtered,
                                   search.scenario};
    const auto predicted = drift ? propagate_drift(event, model, horizon)
                                 : propagate_continued(event, model, cfg.trajectory->plan,
                                                       horizon);
    out.filter.steps.back().region =
        search_region(predicted.front(), 0.0, search.confidence, search.radius_scale);
    for (int h = 0; h <= horizon; ++h) {
      const auto& state = predicted[static_cast<std::size_t>(h)];
      const StateVector& x = truth[static_cast<std::size_t>(last_packet + h)];
      auto region = search_region(state, h * cfg.dt, search.confidence, search.radius_scale);
      out.divergence.push_back((state.position() - x.head<3>()).norm());
      out.covered.push_back(region.contains(x.head<3>()));
      if (h == 0) continue;
      StepRecord rec;
      rec.time = state.time;
      rec.truth = x;
      rec.filtered = state;
      rec.region = std::move(region);
      out.filter.steps.push_back(std::move(rec));
    }
  });

  RunRecord record;
  record.kind = ExperimentKind::Search;
  auto& m = record.metrics;

  std::vector<FilterRun> filter_runs;
  filter_runs.reserve(runs.size());
  for (const auto& run : runs) filter_runs.push_back(run.filter);
  fill_tracking_metrics(cfg, filter_runs, m);

  m.detection_time = kNaN;
  for (int k = last_packet + 1; k <= total; ++k) {
    if (detect_disconnection(last_packet * cfg.dt, k * cfg.dt, cfg.dt, search.tolerance_factor)) {
      m.detection_time = k * cfg.dt;
      break;
    }
  }

  const auto& steps0 = runs.front().filter.steps;
  for (int h = 0; h <= horizon; ++h) {
    const auto idx = static_cast<std::size_t>(h);
    HorizonStats hs;
    hs.horizon = h * cfg.dt;
    std::vector<double> div;
    int covered = 0;
    for (const auto& run : runs) {
      div.push_back(run.divergence[idx]);
      covered += run.covered[idx] ? 1 : 0;
    }
    hs.divergence_median = median(div);
    hs.divergence_mean = mean(div);
    const auto& step = steps0[static_cast<std::size_t>(last_packet + h)];
    hs.trace = step.filtered.cov.trace();
    hs.radius = step.region->radius;
    hs.coverage = static_cast<double>(covered) / static_cast<double>(runs.size());
    m.horizons.push_back(hs);
  }
  record.steps = std::move(runs.front().filter.steps);
  return record;
}

}  // namespace auvloc
