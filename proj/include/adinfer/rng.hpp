#pragma once

#include <cstdint>

namespace adinfer {

// Counter-based hashing: all randomness in the library is derived by mixing
// a seed with integer coordinates, so results are reproducible across
// platforms and independent of call order.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t a) {
  return mix64(seed ^ (a + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline std::uint64_t hash3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return hash_combine(hash_combine(seed, a), b);
}

// Stateful splitmix64 stream; used where a plain sequence is enough
// (synthetic tables, benchmark edge picks).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in (0, 1]; never returns 0 so products stay positive
  double next_unit() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return n ? next() % n : 0; }

 private:
  std::uint64_t state_;
};

}  // namespace adinfer
