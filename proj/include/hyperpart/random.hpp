#pragma once

#include <cstdint>
#include <vector>

#include "hyperpart/assertions.hpp"
#include "hyperpart/types.hpp"

namespace hyperpart {

// Counter-based generator (SplitMix64): the state is a counter advanced by a
// fixed gamma and every output is a bijective hash of it. Streams for
// different (thread, phase) pairs are derived by hashing into the seed, so
// any worker can reproduce its stream without shared RNG state.
class Rng {
 public:
  explicit Rng(uint64_t seed) : _state(seed) {}

  uint64_t next() {
    uint64_t z = (_state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Unbiased draw from [0, bound), bound > 0. Lemire's multiply-shift with
  // rejection on the low word.
  uint64_t nextBounded(uint64_t bound) {
    HP_ASSERT(bound > 0);
    uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    uint64_t low = static_cast<uint64_t>(m);
    if (low < bound) {
      const uint64_t threshold = -bound % bound;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform in [0, 1).
  double nextDouble() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool nextBool() { return (next() & 1) != 0; }

  template <typename T>
  void shuffle(T* data, size_t n) {
    for (size_t i = n; i > 1; --i) {
      std::swap(data[i - 1], data[nextBounded(i)]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    shuffle(v.data(), v.size());
  }

 private:
  uint64_t _state;
};

inline uint64_t hashPair(uint64_t a, uint64_t b) {
  // One SplitMix64 round over a mixed pair; good enough to decorrelate
  // neighboring (thread, phase) ids.
  uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0xD1B54A32D192ED03ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Per-thread stream for one phase of one run: seed xor hash(thread, phase).
inline Rng derivedRng(uint64_t seed, uint64_t thread_index, uint64_t phase_id) {
  return Rng(seed ^ hashPair(thread_index, phase_id));
}

}  // namespace hyperpart
