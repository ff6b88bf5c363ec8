/*!
 * \file gdec/support/rng.h
 * \brief Seedable PRNG helpers with platform-independent streams.
 *
 * Standard-library distributions are implementation-defined, so everything
 * that must reproduce bit-identically (mock logits, dataset generation,
 * sampling) draws through these helpers instead.
 */
#pragma once

#include <cstdint>

namespace gdec {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

/// Small deterministic generator (xoshiro-free: splitmix stream).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0xa0761d6478bd642full) {}

  uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, bound). bound must be > 0. Uses rejection-free
  /// multiply-shift which is fine for test-scale bounds.
  uint64_t next_below(uint64_t bound) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Uniform double in [0, 1) with 53 bits of entropy.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

}  // namespace gdec
