#pragma once

#include <cmath>
#include <cstdint>

#include "steinvar/common.hpp"

namespace steinvar {

/// SplitMix64 finalizer; a cheap strong 64-bit mix.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the idx-th substream of a run seed. Replicates, grid points and
/// nested runs all derive their streams through this one map, so simulated
/// output is a pure function of (seed, index) and never of thread count.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t idx) {
  return mix64(seed ^ mix64(idx * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
}

/// 64-bit SplitMix generator; one instance per replicate stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }
  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Random variate source with pinned algorithms: uniforms from the top 53
/// bits, normals by the Marsaglia polar method, gammas by Marsaglia-Tsang
/// (with the shape<1 boost). Run metadata records these choices.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
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

  /// Gamma(shape, scale 1), shape > 0.
  double gamma(double shape) {
    if (!(shape > 0)) {
      if (shape == 0) return 0.0;
      throw NonPositiveArgumentError("gamma shape must be nonnegative");
    }
    if (shape < 1.0) return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
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

  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// Noncentral chi-square, dof >= 1: central part with dof-1 degrees of
  /// freedom plus (Z + sqrt(lambda))^2.
  double noncentral_chi_square(double dof, double lambda) {
    if (!(dof >= 1)) throw NonPositiveArgumentError("noncentral chi-square needs dof >= 1");
    if (!(lambda >= 0)) throw NonPositiveArgumentError("noncentrality must be >= 0");
    const double shifted = normal() + std::sqrt(lambda);
    return shifted * shifted + (dof > 1 ? chi_square(dof - 1) : 0.0);
  }

 private:
  SplitMix64 gen_;
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace steinvar
