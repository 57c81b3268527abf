#include "auvloc/tdoa_solver.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "auvloc/error.hpp"

namespace auvloc {
namespace {

constexpr std::size_t kChanAuxiliaries = 4;
constexpr double kDegenerateLeading = 1e-12;
constexpr double kDiscriminantClamp = 1e-9;
constexpr int kFallbackIterations = 8;

void check_arity(const TdoaObservation& obs, const BuoyArray& buoys) {
  if (obs.deltas.size() != buoys.auxiliaries.size()) {
    throw Error(ErrorCode::PreconditionViolated,
                "observation has " + std::to_string(obs.deltas.size()) + " deltas for " +
                    std::to_string(buoys.auxiliaries.size()) + " auxiliary buoys");
  }
}

}  // namespace

std::string_view to_string(FixMethod m) noexcept {
  switch (m) {
    case FixMethod::Chan: return "chan";
    case FixMethod::Linearized: return "linearized";
    case FixMethod::OverdeterminedLS: return "overdetermined";
  }
  return "unknown";
}

ChanQuadratic chan_quadratic(const Vec3& a, const Vec3& b, const Vec3& reference) {
  const Vec3 offset = b - reference;
  return {a.squaredNorm() - 1.0, 2.0 * a.dot(offset), offset.squaredNorm()};
}

ChanSystem build_chan_system(const TdoaObservation& obs, const BuoyArray& buoys,
                             const AcousticConfig& cfg) {
  check_arity(obs, buoys);
  if (buoys.auxiliaries.size() < kChanAuxiliaries) {
    throw Error(ErrorCode::PreconditionViolated,
                "Chan solver needs 4 auxiliary buoys, got " +
                    std::to_string(buoys.auxiliaries.size()));
  }
  const double c = cfg.sound_speed_mps;
  const Vec3& s0 = buoys.reference;
  const double k0 = s0.squaredNorm();

  ChanSystem sys;
  sys.reference = s0;
  sys.a_mat.resize(kChanAuxiliaries, 3);
  sys.c_vec.resize(kChanAuxiliaries);
  sys.d_vec.resize(kChanAuxiliaries);
  for (std::size_t i = 0; i < kChanAuxiliaries; ++i) {
    const Vec3& si = buoys.auxiliaries[i];
    const double range_diff = c * obs.deltas[i];
    const auto row = static_cast<Eigen::Index>(i);
    sys.a_mat.row(row) = (si - s0).transpose();
    sys.c_vec(row) = -range_diff;
    sys.d_vec(row) = 0.5 * (si.squaredNorm() - k0 - range_diff * range_diff);
  }

  Eigen::JacobiSVD<Matrix> svd(sys.a_mat);
  const auto& sv = svd.singularValues();
  if (sv(2) < kRankTolerance * sv(0)) {
    throw Error(ErrorCode::RankDeficient, "buoy geometry matrix has rank < 3");
  }
  return sys;
}

double tdoa_residual_rms(const Vec3& p, const TdoaObservation& obs, const BuoyArray& buoys,
                         const AcousticConfig& cfg) {
  check_arity(obs, buoys);
  const auto predicted = range_differences(p, buoys);
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double r = predicted[i] - cfg.sound_speed_mps * obs.deltas[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

PositionFix solve_chan(const TdoaObservation& obs, const BuoyArray& buoys,
                       const AcousticConfig& cfg, const std::optional<Vec3>& prefer_near) {
  const ChanSystem sys = build_chan_system(obs, buoys, cfg);
  const Matrix pinv = pseudoinverse(sys.a_mat);
  const Vec3 a = pinv * sys.c_vec;
  const Vec3 b = pinv * sys.d_vec;
  const auto [qa, qb, qc] = chan_quadratic(a, b, sys.reference);

  double roots[2];
  int n_roots = 0;
  if (std::abs(qa) < kDegenerateLeading) {
    if (qb == 0.0) throw Error(ErrorCode::NoRealRoot, "Chan quadratic is degenerate");
    roots[n_roots++] = -qc / qb;
  } else {
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) {
      if (disc < -kDiscriminantClamp * qb * qb) {
        throw Error(ErrorCode::NoRealRoot, "Chan quadratic has no real root");
      }
      disc = 0.0;
    }
    // Cancellation-free form of the two roots.
    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    roots[n_roots++] = q / qa;
    if (q != 0.0) roots[n_roots++] = qc / q;
  }

  // Round-off can push the r0 = 0 root slightly negative.
  const double slack = 1e-9 * std::max(1.0, (b - sys.reference).norm());
  PositionFix best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_roots; ++i) {
    double r0 = roots[i];
    if (!std::isfinite(r0) || r0 < -slack) continue;
    r0 = std::max(r0, 0.0);
    const Vec3 p = a * r0 + b;
    const double residual = tdoa_residual_rms(p, obs, buoys, cfg);
    const double score = prefer_near ? (p - *prefer_near).norm() : residual;
    if (score < best_score) {
      best_score = score;
      best = {p, r0, residual, FixMethod::Chan};
    }
  }
  if (!std::isfinite(best_score)) {
    throw Error(ErrorCode::NoPositiveRoot, "Chan quadratic has no non-negative root");
  }
  return best;
}

PositionFix solve_linearized(const TdoaObservation& obs, const BuoyArray& buoys,
                             const AcousticConfig& cfg, const Vec3& nominal) {
  check_arity(obs, buoys);
  const std::size_t m = buoys.auxiliaries.size();
  if (m < 3) {
    throw Error(ErrorCode::PreconditionViolated, "linearized solver needs >= 3 auxiliary buoys");
  }
  for (std::size_t i = 0; i < buoys.size(); ++i) {
    if ((nominal - buoys.at(i)).norm() < 1e-9) {
      throw Error(ErrorCode::SingularGradient,
                  "linearization point coincides with buoy " + std::to_string(i));
    }
  }
  const Vec3 to_ref = nominal - buoys.reference;
  const double r0 = to_ref.norm();
  const Vec3 u0 = to_ref / r0;

  Matrix jac(m, 3);
  Vector rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 to_i = nominal - buoys.auxiliaries[i];
    const double ri = to_i.norm();
    const Vec3 grad = to_i / ri - u0;
    const auto row = static_cast<Eigen::Index>(i);
    jac.row(row) = grad.transpose();
    rhs(row) = cfg.sound_speed_mps * obs.deltas[i] - (ri - r0) + grad.dot(nominal);
  }
  PositionFix fix;
  fix.position = solve_least_squares(jac, rhs);
  fix.r0 = (fix.position - buoys.reference).norm();
  fix.residual_rms = tdoa_residual_rms(fix.position, obs, buoys, cfg);
  fix.method = FixMethod::Linearized;
  return fix;
}

PositionFix solve_overdetermined(const TdoaObservation& obs, const BuoyArray& buoys,
                                 const AcousticConfig& cfg) {
  check_arity(obs, buoys);
  const std::size_t m = buoys.auxiliaries.size();
  if (m < 5) {
    throw Error(ErrorCode::PreconditionViolated,
                "overdetermined solver needs >= 5 auxiliary buoys, got " + std::to_string(m));
  }
  const double c = cfg.sound_speed_mps;
  const Vec3& s0 = buoys.reference;
  const double k0 = s0.squaredNorm();

  // Unknowns (x, y, z, r0): (s_i - s0)^T p + c dt_i r0 = d_i.
  Matrix a(m, 4);
  Vector d(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3& si = buoys.auxiliaries[i];
    const double range_diff = c * obs.deltas[i];
    const auto row = static_cast<Eigen::Index>(i);
    a.block<1, 3>(row, 0) = (si - s0).transpose();
    a(row, 3) = range_diff;
    d(row) = 0.5 * (si.squaredNorm() - k0 - range_diff * range_diff);
  }
  const Vector sol = solve_least_squares(a, d);
  const Vec3 p = sol.head<3>();

  PositionFix fix;
  try {
    fix = solve_linearized(obs, buoys, cfg, p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularGradient) throw;
    fix.position = p;
    fix.r0 = (p - s0).norm();
    fix.residual_rms = tdoa_residual_rms(p, obs, buoys, cfg);
  }
  fix.method = FixMethod::OverdeterminedLS;
  return fix;
}

namespace {

PositionFix iterate_linearized(const TdoaObservation& obs, const BuoyArray& buoys,
                               const AcousticConfig& cfg, Vec3 start) {
  PositionFix fix = solve_linearized(obs, buoys, cfg, start);
  for (int it = 1; it < kFallbackIterations; ++it) {
    if ((fix.position - start).norm() < 1e-9) break;
    start = fix.position;
    fix = solve_linearized(obs, buoys, cfg, start);
  }
  return fix;
}

}  // namespace

PositionFix solve_primary(const TdoaObservation& obs, const BuoyArray& buoys,
                          const AcousticConfig& cfg, const SolverOptions& options) {
  if (options.use_all_buoys && buoys.auxiliaries.size() >= 5) {
    return solve_overdetermined(obs, buoys, cfg);
  }
  if (options.mode == SolverMode::LinearizedThenChan) {
    const PositionFix initial = iterate_linearized(obs, buoys, cfg, buoys.centroid());
    return solve_chan(obs, buoys, cfg, initial.position);
  }
  return solve_chan(obs, buoys, cfg);
}

std::optional<PositionFix> estimate_position(const TdoaObservation& obs, const BuoyArray& buoys,
                                             const AcousticConfig& cfg,
                                             const SolverOptions& options) {
  try {
    return solve_primary(obs, buoys, cfg, options);
  } catch (const Error&) {
  }
  try {
    return iterate_linearized(obs, buoys, cfg, buoys.centroid());
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace auvloc
