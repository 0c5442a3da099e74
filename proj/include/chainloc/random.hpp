#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace chainloc {

// Seeded random stream shared by every stochastic step of a simulation.
//
// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
// derives uniform and normal variates itself so that a seed replays
// bit-identically on every standard library.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Normal(mean, stddev) via Box-Muller; consumes two 64-bit draws.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace chainloc
