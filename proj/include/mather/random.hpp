#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mather/types.hpp"

namespace mather {

/// mt19937_64 with hand-rolled transforms, so draws are identical across
/// standard libraries (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int index(int n) { return static_cast<int>(uniform() * n) % n; }
  /// Standard normal by Box-Muller (one value of the pair is discarded).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mather
