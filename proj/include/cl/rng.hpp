#pragma once
#include <cmath>
#include <cstdint>
#include <string_view>

namespace cl {

// Deterministic splittable generator (splitmix64 core).  Distributions are
// implemented here rather than with <random> so that streams are
// bit-identical across standard libraries and runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + kGamma)) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller, one variate per call.
  double normal() {
    double u = 0.0;
    do {
      u = uniform();
    } while (u <= 0.0);
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * kPi * v);
  }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Independent stream derived from this seed and a tag; does not advance
  // this generator.
  Rng split(std::uint64_t tag) const {
    return Rng(mix(state_ ^ mix(tag + 0x9e3779b97f4a7c15ULL)));
  }

  Rng split(std::string_view tag) const { return split(fnv1a(tag)); }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t state_;
};

}  // namespace cl
