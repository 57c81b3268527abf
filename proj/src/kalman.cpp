#include "auvloc/kalman.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

#include "auvloc/error.hpp"

namespace auvloc {
namespace {

// Smallest eigenvalue, or throws InvalidNoise if the matrix is not symmetric.
double min_eigenvalue(const Matrix& m, const char* name) {
  try {
    const auto eig = sym_eigen(m);
    return eig.values(eig.values.size() - 1);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidNoise, std::string(name) + ": " + e.what());
  }
}

}  // namespace

StateMatrix symmetrized(const StateMatrix& p) { return 0.5 * (p + p.transpose()); }

KalmanModel build_model(double dt, const StateMatrix& q, const Mat3& r) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidDt, "dt must be positive and finite, got " + std::to_string(dt));
  }
  if (!q.allFinite() || !r.allFinite()) {
    throw Error(ErrorCode::InvalidNoise, "noise covariance has non-finite entries");
  }
  const double q_scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if (min_eigenvalue(q, "process noise") < -1e-9 * q_scale) {
    throw Error(ErrorCode::InvalidNoise, "process noise is not positive semidefinite");
  }
  if (!(min_eigenvalue(r, "measurement noise") > 0.0)) {
    throw Error(ErrorCode::InvalidNoise, "measurement noise is not positive definite");
  }

  KalmanModel model;
  model.dt = dt;
  model.f.setIdentity();
  model.f.topRightCorner<3, 3>() = dt * Mat3::Identity();
  model.g.topRows<3>() = 0.5 * dt * dt * Mat3::Identity();
  model.g.bottomRows<3>() = dt * Mat3::Identity();
  model.h.setZero();
  model.h.leftCols<3>().setIdentity();
  model.q = symmetrized(q);
  model.r = 0.5 * (r + r.transpose());
  return model;
}

StateMatrix diagonal_process_noise(double position_var, double velocity_var) {
  StateMatrix q = StateMatrix::Zero();
  q.diagonal() << position_var, position_var, position_var, velocity_var, velocity_var,
      velocity_var;
  return q;
}

GaussianState predict(const GaussianState& state, const KalmanModel& model,
                      const ControlInput& u) {
  GaussianState out;
  out.mean = model.f * state.mean + model.g * u.accel;
  out.cov = symmetrized(model.f * state.cov * model.f.transpose() + model.q);
  out.time = state.time + model.dt;
  return out;
}

Innovation innovation(const GaussianState& state, const KalmanModel& model, const Vec3& z) {
  Innovation inn;
  inn.residual = z - model.h * state.mean;
  const Mat3 s = model.h * state.cov * model.h.transpose() + model.r;
  inn.cov = 0.5 * (s + s.transpose());
  return inn;
}

double Innovation::normalized_squared() const {
  Eigen::LLT<Mat3> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  return residual.dot(llt.solve(residual));
}

GaussianState update(const GaussianState& state, const KalmanModel& model, const Vec3& z) {
  const Innovation inn = innovation(state, model, z);
  Eigen::LLT<Mat3> llt(inn.cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularInnovation, "innovation covariance is not positive definite");
  }
  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 6, 3> gain =
      llt.solve(model.h * state.cov).transpose();

  GaussianState out;
  out.mean = state.mean + gain * inn.residual;
  out.cov = symmetrized((StateMatrix::Identity() - gain * model.h) * state.cov);
  out.time = state.time;
  return out;
}

GaussianState initial_state(const Vec3& first_fix, double time, const InitialCovariance& init) {
  GaussianState s;
  s.mean.head<3>() = first_fix;
  s.mean.tail<3>().setZero();
  s.cov = diagonal_process_noise(init.position_var, init.velocity_var);
  s.time = time;
  return s;
}

}  // namespace auvloc
