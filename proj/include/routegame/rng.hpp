#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace routegame {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of substream `stream` (an agent index) under a trial seed:
//   splitmix64(seed ^ splitmix64(stream))
// Streams are independent of how many other streams exist.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Uniform double in [0, 1) from the top 53 bits; identical across platforms,
// unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::size_t k, Rng& rng) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k));
  return i < k ? i : k - 1;
}

// Inverse-CDF draw from a probability vector.
inline std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return 0;
}

}  // namespace routegame
