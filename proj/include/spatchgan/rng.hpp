#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spatchgan {

// Deterministic stream derivation. Every random decision in the library is
// drawn from an engine derived from (seed, purpose path) so that runs are
// reproducible and training can resume mid-stream without serializing
// engine state: the schedule at iteration k depends only on (seed, k).

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

/// Engine for a derived stream, e.g. make_rng(seed, {kStreamInit, layer_idx}).
inline std::mt19937 make_rng(uint64_t seed, std::initializer_list<uint64_t> path) {
  uint64_t s = splitmix64(seed);
  for (uint64_t p : path) s = mix_seed(s, p);
  return std::mt19937(static_cast<uint32_t>(s ^ (s >> 32)));
}

// Stream purpose tags.
inline constexpr uint64_t kStreamInit = 0x01;
inline constexpr uint64_t kStreamEpochShuffle = 0x02;
inline constexpr uint64_t kStreamAugment = 0x03;
inline constexpr uint64_t kStreamSpectralInit = 0x04;

template <typename T, typename Rng>
void fill_normal(Rng& rng, T* data, size_t n, T stddev, T mean = T(0)) {
  std::normal_distribution<double> dist(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) data[i] = mean + stddev * static_cast<T>(dist(rng));
}

}  // namespace spatchgan
