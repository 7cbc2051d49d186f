#pragma once

#include "radarplace/types.hpp"

#include <cstdint>
#include <random>

namespace radarplace {

using Rng = std::mt19937_64;

/// Independent random streams within one trial.
enum class Stream : std::uint64_t { Init = 1, Targets = 2, Measurements = 3, Mppi = 4, Test = 99 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-style derivation: (seed, stream, substream) -> engine. Streams never share state,
/// so consuming one never shifts another.
inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t substream = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ substream);
  return Rng(h);
}

inline Vec standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = dist(rng);
  return out;
}

}  // namespace radarplace
