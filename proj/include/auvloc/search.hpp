#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "auvloc/kalman.hpp"
#include "auvloc/random.hpp"

namespace auvloc {

enum class Scenario { ContinuedNavigation, PropulsionFailure };

std::string_view to_string(Scenario s) noexcept;

struct DisconnectionEvent {
  double time = 0.0;
  GaussianState last_state;
  Scenario scenario = Scenario::ContinuedNavigation;
};

struct PlanStep {
  double time = 0.0;
  Vec3 accel = Vec3::Zero();
};

/// Predetermined acceleration schedule, one entry per filter step.
struct NavigationPlan {
  std::vector<PlanStep> steps;

  /// Times strictly increasing with spacing dt (relative tolerance 1e-9).
  void validate(double dt) const;
  /// Input applied at `time`; throws PlanExhausted if there is no entry.
  const Vec3& input_at(double time, double dt) const;
};

struct EllipsoidAxis {
  Vec3 direction = Vec3::Zero();
  double semi_length = 0.0;  // m
};

struct SearchRegion {
  double horizon = 0.0;  // s since disconnection
  Vec3 center = Vec3::Zero();
  Mat3 cov_pos = Mat3::Zero();
  double radius = 0.0;  // radius_scale * sqrt(tr P), full 6x6 P
  std::array<EllipsoidAxis, 3> axes{};  // semi_length descending
  double confidence = 0.0;

  bool contains(const Vec3& p) const;
};

inline constexpr double kDefaultDisconnectTolerance = 1.5;

/// True iff now - last_packet_time > tolerance_factor * dt.
bool detect_disconnection(double last_packet_time, double now, double dt,
                          double tolerance_factor = kDefaultDisconnectTolerance);

/// Scenario 1: prediction-only filter run driven by the plan. Returns
/// steps + 1 states, the first being the event state.
std::vector<GaussianState> propagate_continued(const DisconnectionEvent& event,
                                               const KalmanModel& model,
                                               const NavigationPlan& plan, int steps);

/// Scenario 2: mean follows x' = F x, covariance F P F^T + Q.
std::vector<GaussianState> propagate_drift(const DisconnectionEvent& event,
                                           const KalmanModel& model, int steps);

/// Zero-mean Gaussian draw with covariance `cov`. Throws QNotPSD when cov has
/// an eigenvalue below -1e-9 relative to its scale.
StateVector sample_gaussian(const StateMatrix& cov, Rng& rng);

/// One realization of x' = F x + w, w ~ N(0, Q), starting at the event mean.
/// Returns steps + 1 full states.
std::vector<StateVector> sample_drift_states(const DisconnectionEvent& event,
                                             const KalmanModel& model, int steps,
                                             Rng& rng);

/// Positions of sample_drift_states().
std::vector<Vec3> sample_drift_trajectory(const DisconnectionEvent& event,
                                          const KalmanModel& model, int steps, Rng& rng);

SearchRegion search_region(const GaussianState& state, double horizon,
                           double confidence, double radius_scale = 1.0);

}  // namespace auvloc
