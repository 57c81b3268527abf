#include "auvloc/random.hpp"

namespace auvloc {

Rng make_stream(std::uint64_t seed, std::uint64_t unit, std::uint64_t purpose) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(unit), hi(unit), lo(purpose), hi(purpose)};
  return Rng(seq);
}

}  // namespace auvloc
