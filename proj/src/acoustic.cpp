#include "auvloc/acoustic.hpp"

#include <cmath>
#include <string>

#include "auvloc/error.hpp"

namespace auvloc {

Vec3 BuoyArray::centroid() const {
  Vec3 sum = reference;
  for (const auto& s : auxiliaries) sum += s;
  return sum / static_cast<double>(size());
}

void BuoyArray::validate() const {
  if (auxiliaries.empty()) {
    throw Error(ErrorCode::ValidationError, "buoys: need a reference and at least one auxiliary");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!at(i).allFinite()) {
      throw Error(ErrorCode::ValidationError, "buoys[" + std::to_string(i) + "]: non-finite");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((at(i) - at(j)).norm() < 1e-9) {
        throw Error(ErrorCode::ValidationError, "buoys[" + std::to_string(i) +
                                                    "]: coincides with buoys[" +
                                                    std::to_string(j) + "]");
      }
    }
  }
}

void AcousticConfig::validate() const {
  if (!(sound_speed_mps > 0.0) || !std::isfinite(sound_speed_mps)) {
    throw Error(ErrorCode::ValidationError, "sound_speed_mps: must be positive");
  }
  if (!(timing_noise_std_s >= 0.0) || !std::isfinite(timing_noise_std_s)) {
    throw Error(ErrorCode::ValidationError, "timing_noise_std_s: must be >= 0");
  }
}

double travel_time(const Vec3& p, const Vec3& s, const AcousticConfig& cfg) {
  return (p - s).norm() / cfg.sound_speed_mps;
}

std::vector<double> range_differences(const Vec3& p, const BuoyArray& buoys) {
  const double r0 = (p - buoys.reference).norm();
  std::vector<double> out;
  out.reserve(buoys.auxiliaries.size());
  for (const auto& s : buoys.auxiliaries) out.push_back((p - s).norm() - r0);
  return out;
}

TdoaObservation make_observation(const Vec3& p, const BuoyArray& buoys,
                                 const AcousticConfig& cfg, Rng& rng, double time) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double t0 = travel_time(p, buoys.reference, cfg);
  TdoaObservation obs;
  obs.time = time;
  obs.deltas.reserve(buoys.auxiliaries.size());
  for (const auto& s : buoys.auxiliaries) {
    const double eta = cfg.timing_noise_std_s * noise(rng);
    obs.deltas.push_back(travel_time(p, s, cfg) - t0 + eta);
  }
  return obs;
}

}  // namespace auvloc
