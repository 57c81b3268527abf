#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "auvloc/acoustic.hpp"
#include "auvloc/kalman.hpp"
#include "auvloc/search.hpp"
#include "auvloc/tdoa_solver.hpp"

namespace auvloc {

struct GridSpec {
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Zero();
  std::array<int, 3> counts{1, 1, 1};
  bool z_descending = true;  // z steps go down by |spacing.z|
};

struct TrajectorySpec {
  Vec3 initial_position = Vec3::Zero();
  Vec3 initial_velocity = Vec3::Zero();
  NavigationPlan plan;             // plan.steps[k].time == k * dt
  std::vector<int> dropped_steps;  // step indices with no acoustic packet
  bool truth_process_noise = true;
};

struct SearchSpec {
  double disconnect_time = 0.0;  // s; last packet is the step at or before it
  Scenario scenario = Scenario::ContinuedNavigation;
  std::optional<int> horizon_steps;  // default: until the end of the plan
  double confidence = 0.95;
  double radius_scale = 1.0;
  double tolerance_factor = kDefaultDisconnectTolerance;
};

struct ScenarioConfig {
  std::string name;
  BuoyArray buoys;
  AcousticConfig acoustic;
  double dt = 0.0;
  StateMatrix process_noise = StateMatrix::Zero();
  Mat3 measurement_noise = Mat3::Identity();
  InitialCovariance initial_cov;
  SolverOptions solver;
  std::optional<GridSpec> grid;
  std::optional<TrajectorySpec> trajectory;
  std::optional<SearchSpec> search;
  std::uint64_t seed = 0;
  int monte_carlo_runs = 1;
  std::vector<double> cdf_thresholds;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  KalmanModel model() const;
};

enum class ExperimentKind { Localization, Tracking, Search };

std::string_view to_string(ExperimentKind k) noexcept;

struct GridPointResult {
  Vec3 truth = Vec3::Zero();
  std::optional<PositionFix> fix;  // empty when the solver failed
  double mae = 0.0;         // mean |component error|, m (NaN on failure)
  double error_norm = 0.0;  // Euclidean error, m (NaN on failure)
};

struct StepRecord {
  double time = 0.0;
  StateVector truth = StateVector::Zero();
  std::optional<Vec3> tdoa_fix;
  GaussianState filtered;
  bool updated = false;
  std::optional<SearchRegion> region;
};

struct CdfPoint {
  double threshold = 0.0;
  double fraction = 0.0;
};

// NaN marks "not defined at this step" (e.g. no TDOA fix after disconnection).
struct SeriesPoint {
  double time = 0.0;
  double mse_tdoa = 0.0;
  double mse_filtered = 0.0;
};

struct HorizonStats {
  double horizon = 0.0;
  double divergence_median = 0.0;
  double divergence_mean = 0.0;
  double trace = 0.0;     // tr P of run 0
  double radius = 0.0;    // search radius of run 0
  double coverage = 0.0;  // fraction of runs whose truth lies in the ellipsoid
};

struct Metrics {
  int evaluated = 0;
  int failures = 0;
  double mae = 0.0;       // filtered (tracking) or TDOA (localization), m
  double mae_tdoa = 0.0;  // raw TDOA, m
  double median_mae = 0.0;
  double detection_time = 0.0;  // search only; NaN otherwise
  std::vector<SeriesPoint> mse_series;
  std::vector<CdfPoint> cdf;
  std::vector<HorizonStats> horizons;
};

struct RunRecord {
  ExperimentKind kind = ExperimentKind::Localization;
  std::vector<GridPointResult> points;  // localization
  std::vector<StepRecord> steps;        // tracking/search, Monte Carlo run 0
  Metrics metrics;
};

std::vector<Vec3> generate_grid(const GridSpec& spec);

/// Fraction of errors <= each threshold. Throws EmptyInput on no errors,
/// PreconditionViolated on unsorted thresholds.
std::vector<CdfPoint> compute_cdf(std::span<const double> errors,
                                  std::span<const double> thresholds);

double component_mae(const Vec3& estimate, const Vec3& truth);

/// Noise-free kinematic truth x_{k+1} = F x_k + G u_k for the whole plan.
std::vector<StateVector> planned_trajectory(const TrajectorySpec& spec, const KalmanModel& model);

/// Diagonal position covariance of the pipeline's fix error, estimated by
/// Monte Carlo at the planned trajectory points (or the grid points when no
/// trajectory is configured).
Mat3 calibrate_measurement_noise(const ScenarioConfig& cfg, int samples);

RunRecord run_localization_experiment(const ScenarioConfig& cfg);
RunRecord run_tracking_experiment(const ScenarioConfig& cfg);
RunRecord run_search_experiment(const ScenarioConfig& cfg);

}  // namespace auvloc
