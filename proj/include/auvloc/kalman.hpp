#pragma once

#include <Eigen/Core>

#include "auvloc/linalg.hpp"

namespace auvloc {

// State layout: [x, y, z, vx, vy, vz].
using StateVector = Eigen::Matrix<double, 6, 1>;
using StateMatrix = Eigen::Matrix<double, 6, 6>;
using InputMatrix = Eigen::Matrix<double, 6, 3>;
using ObservationMatrix = Eigen::Matrix<double, 3, 6>;

/// Discrete constant-velocity model driven by an acceleration input:
///   x' = F x + G u + w,  z = H x + v
/// F = [I T*I; 0 I], G = [T^2/2 I; T I], H = [I 0].
struct KalmanModel {
  StateMatrix f;
  InputMatrix g;
  ObservationMatrix h;
  StateMatrix q;
  Mat3 r;
  double dt = 0.0;
};

struct GaussianState {
  StateVector mean = StateVector::Zero();
  StateMatrix cov = StateMatrix::Zero();
  double time = 0.0;

  Vec3 position() const { return mean.head<3>(); }
  Vec3 velocity() const { return mean.tail<3>(); }
  Mat3 position_cov() const { return cov.topLeftCorner<3, 3>(); }
};

struct ControlInput {
  Vec3 accel = Vec3::Zero();
};

/// Errors: InvalidDt (dt <= 0 or not finite), InvalidNoise (q not symmetric
/// PSD or r not symmetric PD).
KalmanModel build_model(double dt, const StateMatrix& q, const Mat3& r);

StateMatrix diagonal_process_noise(double position_var, double velocity_var);

GaussianState predict(const GaussianState& state, const KalmanModel& model,
                      const ControlInput& u);

/// Measurement update with a position fix z. Throws SingularInnovation if
/// H P H^T + R cannot be factored.
GaussianState update(const GaussianState& state, const KalmanModel& model, const Vec3& z);

struct Innovation {
  Vec3 residual;  // z - H x
  Mat3 cov;       // H P H^T + R

  /// residual^T cov^-1 residual
  double normalized_squared() const;
};

Innovation innovation(const GaussianState& state, const KalmanModel& model, const Vec3& z);

struct InitialCovariance {
  double position_var = 100.0;  // m^2
  double velocity_var = 25.0;   // (m/s)^2
};

/// Filter start: position from the first fix, zero velocity.
GaussianState initial_state(const Vec3& first_fix, double time,
                            const InitialCovariance& init = {});

StateMatrix symmetrized(const StateMatrix& p);

}  // namespace auvloc
