#pragma once

#include <cstddef>
#include <vector>

#include "auvloc/linalg.hpp"
#include "auvloc/random.hpp"

namespace auvloc {

inline constexpr double kDefaultSoundSpeed = 1500.0;  // m/s, seawater

/// Reference buoy s0 plus the auxiliaries s1..s_{N-1}, meters.
struct BuoyArray {
  Vec3 reference = Vec3::Zero();
  std::vector<Vec3> auxiliaries;

  std::size_t size() const { return auxiliaries.size() + 1; }
  // Index 0 is the reference.
  const Vec3& at(std::size_t i) const { return i == 0 ? reference : auxiliaries.at(i - 1); }
  Vec3 centroid() const;

  /// Throws ValidationError on non-finite coordinates, an empty auxiliary
  /// list or two coincident buoys.
  void validate() const;
};

struct AcousticConfig {
  double sound_speed_mps = kDefaultSoundSpeed;
  double timing_noise_std_s = 0.0;

  void validate() const;
  double range_noise_std_m() const { return sound_speed_mps * timing_noise_std_s; }
};

/// Emission epoch and arrival-time differences t_i - t_0, one per auxiliary.
struct TdoaObservation {
  double time = 0.0;
  std::vector<double> deltas;
};

double travel_time(const Vec3& p, const Vec3& s, const AcousticConfig& cfg);

/// Noise-free range differences |p - s_i| - |p - s_0|, meters.
std::vector<double> range_differences(const Vec3& p, const BuoyArray& buoys);

/// Forward model with i.i.d. N(0, timing_noise_std^2) added to every delta.
/// Draws exactly one normal per auxiliary from `rng` even when the noise is 0.
TdoaObservation make_observation(const Vec3& p, const BuoyArray& buoys,
                                 const AcousticConfig& cfg, Rng& rng,
                                 double time = 0.0);

}  // namespace auvloc
