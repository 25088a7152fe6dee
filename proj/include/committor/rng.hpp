#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace committor {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random source. Gaussians use the polar Marsaglia method on top of
// mt19937_64 so identical seeds reproduce identical streams bit-for-bit
// independently of the standard library's normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  // Independent child stream, deterministic in (seed, id).
  Rng stream(std::uint64_t id) const {
    return Rng(splitmix64(seed_ ^ splitmix64(id ^ 0x517cc1b727220a95ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gauss() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  void gauss_fill(std::span<double> out) {
    for (double& v : out) v = gauss();
  }

  // uniform integer in [0, n), rejection sampled (no modulo bias)
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= bound);
    return static_cast<std::size_t>(r % n);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Noise injection point for the SDE steppers; tests substitute deterministic
// sources (e.g. all-zero noise).
template <typename T>
concept NoiseSource = requires(T t, std::span<double> s) {
  t.gauss_fill(s);
};

struct ZeroNoise {
  void gauss_fill(std::span<double> out) {
    for (double& v : out) v = 0.0;
  }
};

}  // namespace committor
