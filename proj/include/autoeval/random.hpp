#pragma once

#include <cmath>
#include <cstdint>

namespace autoeval {

/// Counter-free 64-bit PRNG (splitmix64). Every draw is a pure function of
/// the integer state, so streams can be forked per meta-set / per instance
/// and corpora regenerate identically regardless of evaluation order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_open_unit() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller (one uniform pair per deviate).
  double next_normal() {
    const double u1 = next_open_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Derives an independent substream from the current state without
  /// advancing this generator.
  SplitMix64 fork(std::uint64_t stream) const {
    SplitMix64 g(state_ ^ (0xA3EC647659359ACDULL * (stream + 1)));
    g.next();
    return g;
  }

 private:
  std::uint64_t state_;
};

}  // namespace autoeval
