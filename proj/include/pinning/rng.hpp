#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace pinning::rng {

// Counter-based generator: every variate is addressed by (seed, stream,
// counter), so coupled simulations can consume identical randomness no
// matter how many proposals each of them rejects.

inline constexpr std::uint64_t kWeyl = 0x9e3779b97f4a7c15ull;

/// SplitMix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

enum class Stream : std::uint64_t {
  clock = 1,       // ring sites + acceptance uniforms
  event_time = 2,  // exponential waiting times (timed mode)
  poisson = 3,     // per-interval ring counts (batched mode)
  init = 4,        // equilibrium sampling
  aux = 5,         // harness-level draws (initial conditions, shuffles)
};

struct Key {
  std::uint64_t k = 0;
};

inline Key stream_key(std::uint64_t seed, Stream s) {
  return {mix(mix(seed + kWeyl) ^ (static_cast<std::uint64_t>(s) * 0xd1342543de82ef95ull))};
}

inline Key stream_key(std::uint64_t seed, Stream s, std::uint64_t sub) {
  Key base = stream_key(seed, s);
  return {mix(base.k ^ (sub * 0xda942042e4dd58b5ull))};
}

inline std::uint64_t at(Key key, std::uint64_t counter) {
  return mix(key.k + counter * kWeyl);
}

/// Uniform in [0,1).
inline double u01(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53; }

/// Uniform in (0,1); safe as a log() argument.
inline double u01_open(std::uint64_t r) {
  return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
}

/// Maps a 32-bit word to {0,...,n-1} without modulo bias worth caring about.
inline std::uint32_t bounded(std::uint32_t word, std::uint32_t n) {
  return static_cast<std::uint32_t>((static_cast<std::uint64_t>(word) * n) >> 32);
}

/// URBG adapter so std:: distributions can run off an addressed stream.
class CounterEngine {
 public:
  using result_type = std::uint64_t;
  explicit CounterEngine(Key key) : key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return at(key_, counter_++); }

 private:
  Key key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pinning::rng
