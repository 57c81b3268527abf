#pragma once

#include <cstdint>
#include <random>

namespace auvloc {

using Rng = std::mt19937_64;

// Independent stream for one unit of work (grid point, Monte Carlo run,
// calibration sample...). The result depends only on the three keys, so
// parallel schedules reproduce sequential ones.
Rng make_stream(std::uint64_t seed, std::uint64_t unit, std::uint64_t purpose = 0);

namespace stream_purpose {
inline constexpr std::uint64_t kLocalization = 1;
inline constexpr std::uint64_t kTracking = 2;
inline constexpr std::uint64_t kCalibration = 3;
inline constexpr std::uint64_t kDrift = 4;
inline constexpr std::uint64_t kTruth = 5;
}  // namespace stream_purpose

}  // namespace auvloc
