// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_RNG_HPP
#define DIRREG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "dirreg/errors.hpp"

namespace dirreg {

// SplitMix64. Used for seed expansion and for deriving independent
// per-chain streams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Random source with fully specified output: the engine is the standardized
// mt19937_64 and all variate transforms live here, so a (seed, call sequence)
// pair reproduces bit-identical draws on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  // Independent stream `stream` under master seed `master`.
  static Rng derive(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0,1); 52 random bits plus a half-ulp
  // offset keep both endpoints unreachable.
  double uniform() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * (1.0 / 4503599627370496.0);
  }

  // Standard normal via Box-Muller, second variate cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 handled with the
  // Gamma(shape+1) boost.
  double gamma(double shape) {
    require(shape > 0.0, "NonPositiveAlpha",
            "gamma shape must be positive, got " + std::to_string(shape));
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  static std::uint64_t mix_seed(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }

  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace dirreg

#endif  // DIRREG_RNG_HPP
