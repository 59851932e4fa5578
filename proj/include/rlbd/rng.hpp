#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace rlbd {

// Seed derivation: splitmix64 step, used to spin named substreams off one
// 64-bit root seed so every component draws from its own stream.
inline std::uint64_t splitmix64_next(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive a child seed from (seed, tag). Stable across platforms and runs.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) {
  std::uint64_t x = seed;
  std::uint64_t out = splitmix64_next(x);
  for (unsigned char c : tag) {
    x ^= (out << 7) ^ static_cast<std::uint64_t>(c);
    out = splitmix64_next(x);
  }
  return out;
}

inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag,
                                 std::uint64_t index) {
  return derive_seed(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)), tag);
}

// Deterministic RNG. mt19937_64 engine, hand-rolled output mappings so the
// produced doubles do not depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller (cached second draw).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace rlbd
