#pragma once

#include <cstdint>
#include <random>

namespace zodiac {

// All randomness in a run is derived from one master seed through keyed
// substreams, so that agent i at iteration k always sees the same draws no
// matter how many other agents exist or how often metrics are sampled.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t kMixGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Substream key for (master, a, b):
//   mix64(mix64(master + gamma*(a+1)) + gamma*(b+1))
// with gamma = 0x9E3779B97F4A7C15. The +1 offsets keep (a=0, b=0) distinct
// from the raw master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return mix64(mix64(master + kMixGamma * (a + 1)) + kMixGamma * (b + 1));
}

// Engine for agent `agent` at iteration `k`.
inline Rng make_stream(std::uint64_t master, std::uint64_t agent,
                       std::uint64_t k) {
  return Rng(stream_seed(master, agent, k));
}

// Engine for a named scope (dataset generation, graph sampling, ...).
// Scope tags keep unrelated consumers of one master seed decorrelated; they
// live in the high half of the key space so they can never collide with an
// agent id.
enum class StreamTag : std::uint64_t {
  kDataset = 0x10,
  kPartition = 0x11,
  kGraph = 0x12,
  kInit = 0x13,
  kProblem = 0x14,
};

inline constexpr std::uint64_t kTagKeyBase = 0xFFFFFFFF00000000ULL;

inline Rng make_stream(std::uint64_t master, StreamTag tag,
                       std::uint64_t sub = 0) {
  return Rng(
      stream_seed(master, kTagKeyBase | static_cast<std::uint64_t>(tag), sub));
}

}  // namespace zodiac
