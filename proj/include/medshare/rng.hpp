#pragma once

#include <cstdint>

#include "medshare/bytes.hpp"

namespace medshare {

// Deterministic, seedable random source. Every random draw in the simulation
// flows through an instance of this class; identical seeds give identical
// runs. xoshiro256** seeded via splitmix64. Not shared between threads —
// create one per thread or derive sub-streams with fork().
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) {
      // splitmix64 step
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      word = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    uint64_t* s = state_;
    uint64_t result = rotl(s[1] * 5, 7) * 9;
    uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }

  // Uniform in [0, bound). bound must be nonzero.
  uint64_t next_below(uint64_t bound) {
    // rejection sampling to avoid modulo bias
    uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  Bytes bytes(size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
  }

  void fill(uint8_t* dst, size_t n) {
    size_t i = 0;
    while (i < n) {
      uint64_t v = next_u64();
      for (int b = 0; b < 8 && i < n; ++b, ++i) {
        dst[i] = static_cast<uint8_t>(v >> (8 * b));
      }
    }
  }

  template <size_t N>
  std::array<uint8_t, N> fixed() {
    std::array<uint8_t, N> out{};
    fill(out.data(), N);
    return out;
  }

  // Independent sub-stream; used to seed per-trial or per-actor streams so
  // results do not depend on interleaving.
  Rng fork() { return Rng(next_u64()); }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace medshare
