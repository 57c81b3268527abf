#include "auvloc/search.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "auvloc/chi_squared.hpp"
#include "auvloc/error.hpp"

namespace auvloc {

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::ContinuedNavigation: return "continued_navigation";
    case Scenario::PropulsionFailure: return "propulsion_failure";
  }
  return "unknown";
}

void NavigationPlan::validate(double dt) const {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!std::isfinite(steps[i].time) || !steps[i].accel.allFinite()) {
      throw Error(ErrorCode::ValidationError, "plan[" + std::to_string(i) + "]: non-finite");
    }
    if (i == 0) continue;
    const double gap = steps[i].time - steps[i - 1].time;
    if (std::abs(gap - dt) > 1e-9 * dt) {
      throw Error(ErrorCode::ValidationError,
                  "plan[" + std::to_string(i) + "]: step spacing must equal dt");
    }
  }
}

const Vec3& NavigationPlan::input_at(double time, double dt) const {
  if (!steps.empty()) {
    const double k = std::round((time - steps.front().time) / dt);
    if (k >= 0.0 && k < static_cast<double>(steps.size())) {
      const auto& step = steps[static_cast<std::size_t>(k)];
      if (std::abs(step.time - time) <= 1e-9 * std::max(1.0, std::abs(time))) return step.accel;
    }
  }
  throw Error(ErrorCode::PlanExhausted,
              "navigation plan has no input for t = " + std::to_string(time) + " s");
}

bool SearchRegion::contains(const Vec3& p) const {
  const Vec3 d = p - center;
  double sum = 0.0;
  for (const auto& axis : axes) {
    const double along = d.dot(axis.direction);
    if (axis.semi_length > 0.0) {
      sum += (along / axis.semi_length) * (along / axis.semi_length);
    } else if (std::abs(along) > 1e-12) {
      return false;
    }
  }
  return sum <= 1.0;
}

bool detect_disconnection(double last_packet_time, double now, double dt,
                          double tolerance_factor) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidDt, "detect_disconnection: dt must be > 0");
  if (!(tolerance_factor >= 1.0)) {
    throw Error(ErrorCode::PreconditionViolated,
                "detect_disconnection: tolerance_factor must be >= 1");
  }
  return (now - last_packet_time) > tolerance_factor * dt;
}

std::vector<GaussianState> propagate_continued(const DisconnectionEvent& event,
                                               const KalmanModel& model,
                                               const NavigationPlan& plan, int steps) {
  if (event.scenario != Scenario::ContinuedNavigation) {
    throw Error(ErrorCode::PreconditionViolated,
                "propagate_continued requires the continued-navigation scenario");
  }
  std::vector<GaussianState> out;
  out.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  out.push_back(event.last_state);
  for (int k = 0; k < steps; ++k) {
    const GaussianState& prev = out.back();
    out.push_back(predict(prev, model, ControlInput{plan.input_at(prev.time, model.dt)}));
  }
  return out;
}

std::vector<GaussianState> propagate_drift(const DisconnectionEvent& event,
                                           const KalmanModel& model, int steps) {
  if (event.scenario != Scenario::PropulsionFailure) {
    throw Error(ErrorCode::PreconditionViolated,
                "propagate_drift requires the propulsion-failure scenario");
  }
  std::vector<GaussianState> out;
  out.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  out.push_back(event.last_state);
  for (int k = 0; k < steps; ++k) out.push_back(predict(out.back(), model, ControlInput{}));
  return out;
}

StateVector sample_gaussian(const StateMatrix& cov, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<StateMatrix> eig(symmetrized(cov));
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw Error(ErrorCode::QNotPSD, "covariance is not positive semidefinite");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  StateVector z;
  for (int i = 0; i < 6; ++i) z(i) = normal(rng);
  const StateVector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * z;
}

std::vector<StateVector> sample_drift_states(const DisconnectionEvent& event,
                                             const KalmanModel& model, int steps, Rng& rng) {
  if (event.scenario != Scenario::PropulsionFailure) {
    throw Error(ErrorCode::PreconditionViolated,
                "sample_drift_trajectory requires the propulsion-failure scenario");
  }
  std::vector<StateVector> out;
  out.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  out.push_back(event.last_state.mean);
  for (int k = 0; k < steps; ++k) {
    out.push_back(model.f * out.back() + sample_gaussian(model.q, rng));
  }
  return out;
}

std::vector<Vec3> sample_drift_trajectory(const DisconnectionEvent& event,
                                          const KalmanModel& model, int steps, Rng& rng) {
  std::vector<Vec3> out;
  for (const auto& x : sample_drift_states(event, model, steps, rng)) out.push_back(x.head<3>());
  return out;
}

SearchRegion search_region(const GaussianState& state, double horizon, double confidence,
                           double radius_scale) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::PreconditionViolated, "search_region: confidence must lie in (0, 1)");
  }
  SearchRegion region;
  region.horizon = horizon;
  region.center = state.position();
  region.cov_pos = state.position_cov();
  region.radius = radius_scale * std::sqrt(std::max(state.cov.trace(), 0.0));
  region.confidence = confidence;

  const double quantile = chi_squared_quantile(confidence, 3.0);
  const auto eig = sym_eigen(region.cov_pos);
  for (int i = 0; i < 3; ++i) {
    region.axes[static_cast<std::size_t>(i)] = {
        eig.vectors.col(i), std::sqrt(quantile * std::max(eig.values(i), 0.0))};
  }
  return region;
}

}  // namespace auvloc
