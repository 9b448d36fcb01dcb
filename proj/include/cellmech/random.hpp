#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "cellmech/geometry.hpp"

namespace cellmech {

// All randomness in the engine derives from SplitMix64 (Steele, Lea & Flood
// 2014) with its published constants. Values are drawn in double precision
// and narrowed afterwards, so float and double runs see identical streams.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Counter-based key for a (a, b) pair plus a stream tag. Used to seed
/// per-event generators, e.g. (mother uid, step) for daughter placement.
constexpr std::uint64_t counter_key(std::uint64_t a, std::uint64_t b,
                                    std::uint64_t stream) {
  return mix64(mix64(a + kGoldenGamma * (stream + 1)) ^ (b * 0xD1B54A32D192ED03ULL));
}

/// Uniformly distributed unit vector derived from a key.
inline Vec3<double> unit_vector(std::uint64_t key) {
  SplitMix64 rng(key);
  const double z = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

// Stream tags for counter_key.
inline constexpr std::uint64_t kStreamDivision = 1;
inline constexpr std::uint64_t kStreamDegenerate = 2;

}  // namespace cellmech
