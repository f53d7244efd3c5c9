#pragma once

#include <cstdint>
#include <random>

namespace bernreg {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes a master seed with a stream index so that
/// sibling streams (per process, per run) are decorrelated.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gamma_draw(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double beta_draw(double a, double b, Rng& rng) {
  const double x = gamma_draw(a, 1.0, rng);
  const double y = gamma_draw(b, 1.0, rng);
  return x / (x + y);
}

}  // namespace bernreg
