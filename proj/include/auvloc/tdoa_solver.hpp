#pragma once

#include <optional>
#include <string_view>

#include "auvloc/acoustic.hpp"
#include "auvloc/linalg.hpp"

namespace auvloc {

enum class FixMethod { Chan, Linearized, OverdeterminedLS };

std::string_view to_string(FixMethod m) noexcept;

// Chan's linear form over four auxiliaries:
//   (s_i - s0)^T p = r0 * c_vec[i] + d_vec[i]
// with c_vec[i] = -c dt_i and d_vec[i] = (k_i - k0 - c^2 dt_i^2) / 2,
// k_i = |s_i|^2. This is what squaring c dt_i = |p - s_i| - r0 gives.
struct ChanSystem {
  Matrix a_mat;  // 4x3
  Vector c_vec;  // 4
  Vector d_vec;  // 4
  Vec3 reference = Vec3::Zero();
};

struct PositionFix {
  Vec3 position = Vec3::Zero();
  double r0 = 0.0;            // range to the reference buoy, m
  double residual_rms = 0.0;  // RMS range-difference residual, m
  FixMethod method = FixMethod::Chan;
};

// Coefficients of qa r0^2 + qb r0 + qc = 0 obtained by substituting
// p = a r0 + b into r0^2 = |p - s0|^2.
struct ChanQuadratic {
  double qa = 0.0;
  double qb = 0.0;
  double qc = 0.0;
};

ChanQuadratic chan_quadratic(const Vec3& a, const Vec3& b, const Vec3& reference);

/// Uses the first four auxiliaries. Throws PreconditionViolated with fewer,
/// RankDeficient when the 4x3 geometry matrix has rank < 3.
ChanSystem build_chan_system(const TdoaObservation& obs, const BuoyArray& buoys,
                             const AcousticConfig& cfg);

/// RMS of (|p - s_i| - |p - s0|) - c dt_i over every auxiliary in `obs`.
double tdoa_residual_rms(const Vec3& p, const TdoaObservation& obs,
                         const BuoyArray& buoys, const AcousticConfig& cfg);

/// Closed-form Chan fix. When both roots are admissible the one with the
/// smaller residual wins, or, if `prefer_near` is given, the one whose
/// position is closest to it.
/// Errors: RankDeficient, NoRealRoot, NoPositiveRoot.
PositionFix solve_chan(const TdoaObservation& obs, const BuoyArray& buoys,
                       const AcousticConfig& cfg,
                       const std::optional<Vec3>& prefer_near = std::nullopt);

/// One Gauss-Newton step of the range-difference equations around `nominal`.
/// Errors: PreconditionViolated (< 3 auxiliaries), SingularGradient (nominal
/// on a buoy), RankDeficient.
PositionFix solve_linearized(const TdoaObservation& obs, const BuoyArray& buoys,
                             const AcousticConfig& cfg, const Vec3& nominal);

/// Joint least squares in (p, r0) over all auxiliaries followed by one
/// linearized step. Requires >= 5 auxiliaries.
PositionFix solve_overdetermined(const TdoaObservation& obs, const BuoyArray& buoys,
                                 const AcousticConfig& cfg);

enum class SolverMode {
  Chan,                // Chan, linearized-at-centroid fallback
  LinearizedThenChan,  // linearized initial estimate disambiguates the Chan root
};

struct SolverOptions {
  SolverMode mode = SolverMode::Chan;
  bool use_all_buoys = true;  // overdetermined path when >= 5 auxiliaries
};

/// The configured primary path without fallback; throws on failure.
PositionFix solve_primary(const TdoaObservation& obs, const BuoyArray& buoys,
                          const AcousticConfig& cfg, const SolverOptions& options = {});

/// Pipeline entry point: picks the path from `options` and falls back to
/// solve_linearized at the buoy centroid if the primary path throws.
/// Returns nullopt only if every path failed.
std::optional<PositionFix> estimate_position(const TdoaObservation& obs,
                                             const BuoyArray& buoys,
                                             const AcousticConfig& cfg,
                                             const SolverOptions& options = {});

}  // namespace auvloc
