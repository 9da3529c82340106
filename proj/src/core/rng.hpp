#pragma once

#include <cstdint>

namespace stochchain {

// Counter-based stream: the value at (seed, step, draw) is a pure function
// of the three keys, so any step can be sampled independently of the others.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t step, std::uint64_t draw) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(step + 0x632BE59BD9B4E019ull));
  h = splitmix64(h ^ splitmix64(draw + 0x8CB92BA72F3D8DD7ull));
  return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t draw) {
  return static_cast<double>(counter_hash(seed, step, draw) >> 11) * 0x1.0p-53;
}

}  // namespace stochchain
