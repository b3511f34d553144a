#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace epihaz {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG wrapper. All samplers are hand-rolled on top of the
/// mt19937_64 bit stream so that a fixed seed replays byte-identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  /// Stream for replicate `index` of a study seeded with `seed`.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ splitmix64(index + 1));
  }

  std::uint64_t bits() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1); never returns an exact endpoint.
  double uniform_open() { return (double(eng_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard exponential, strictly positive.
  double exponential() { return -std::log(uniform_open()); }

  double normal() {
    // Box-Muller; one draw kept, one discarded, for a branch-free stream.
    const double u = uniform_open();
    const double v = uniform_open();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("Rng::gamma: shape <= 0");
    if (shape < 1.0) {
      const double u = uniform_open();
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
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// Duration distribution for latent and infectious periods.
struct DurationModel {
  enum class Kind { Constant, Exponential, Gamma, Weibull };
  Kind kind = Kind::Constant;
  double a = 0.0;  // constant value, rate, or shape
  double b = 0.0;  // rate for gamma/weibull

  static DurationModel constant(double v) { return {Kind::Constant, v, 0.0}; }
  static DurationModel exponential(double rate) { return {Kind::Exponential, rate, 0.0}; }
  static DurationModel gamma(double shape, double rate) { return {Kind::Gamma, shape, rate}; }
  static DurationModel weibull(double shape, double rate) { return {Kind::Weibull, shape, rate}; }

  double sample(Rng& rng) const {
    switch (kind) {
      case Kind::Constant:
        return a;
      case Kind::Exponential:
        return rng.exponential() / a;
      case Kind::Gamma:
        return rng.gamma(a) / b;
      case Kind::Weibull:
        return std::pow(rng.exponential(), 1.0 / a) / b;
    }
    throw std::logic_error("DurationModel: bad kind");
  }

  std::string str() const {
    switch (kind) {
      case Kind::Constant:
        return "const:" + std::to_string(a);
      case Kind::Exponential:
        return "exp:" + std::to_string(a);
      case Kind::Gamma:
        return "gamma:" + std::to_string(a) + "," + std::to_string(b);
      case Kind::Weibull:
        return "weibull:" + std::to_string(a) + "," + std::to_string(b);
    }
    return "?";
  }
};

}  // namespace epihaz
