#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace dabea {

// Deterministic counter-based generator (splitmix64). Every stochastic
// operation in the library draws from an Rng constructed out of an explicit
// seed, so results depend only on seeds and never on the OS, wall clock, or
// standard-library distribution internals.
//
// Substreams are derived by hashing a path of integers into the master seed:
// Rng::substream(seed, {image, copy}) gives an independent stream per
// (image, copy) pair regardless of evaluation order or thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(master);
    for (std::uint64_t key : path) s = mix(s ^ mix(key + 0x9E3779B97F4A7C15ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix_z(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased uniform index in [0, n); n >= 1.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t bound = n == 1 ? 0 : (0 - static_cast<std::uint64_t>(n)) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= bound) return static_cast<std::size_t>(r % n);
    }
  }

  // Box-Muller; two uniforms consumed per call.
  double gaussian(double mean, double sd) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sd * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static std::uint64_t mix_z(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t z) { return mix_z(z + 0x9E3779B97F4A7C15ULL); }

  std::uint64_t state_;
};

}  // namespace dabea
