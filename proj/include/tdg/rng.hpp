#pragma once

#include <cmath>
#include <cstdint>

namespace tdg {

/// Counter-based generator (splitmix64 finalizer over an incrementing
/// counter). Streams derived from (seed, stream) are independent and
/// reproducible across platforms; the algorithm name is recorded in
/// calibration and simulation outputs.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64";

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform on the open interval (0,1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

}  // namespace tdg
