#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <utility>

namespace wpcn {

// SplitMix64 finalizer: bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key for a per-link substream. Streams are addressed by (kind, i, j) so a
// draw never depends on how many other links exist.
inline std::uint64_t substream_key(std::uint64_t seed, std::uint64_t kind,
                                   std::uint64_t i = 0, std::uint64_t j = 0) {
  std::uint64_t k = mix64(seed + 0x9e3779b97f4a7c15ULL);
  k = mix64(k ^ (kind + 0xd1b54a32d192ed03ULL));
  k = mix64(k ^ (i + 0x8cb92ba72f3d8dd7ULL));
  k = mix64(k ^ (j + 0x2545f4914f6cdd1dULL));
  return k;
}

// Counter-based stream: output n is a pure function of (key, n), so sequences
// are reproducible bit-for-bit on any platform.
class Substream {
public:
  explicit Substream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() {
    return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (lo, hi).
  double next_range(double lo, double hi) {
    return lo + (hi - lo) * (1.0 - next_unit());
  }

  // Standard normal pair (Box-Muller; first uniform shifted into (0, 1]).
  std::pair<double, double> next_normal_pair() {
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double next_normal() { return next_normal_pair().first; }

  // Circularly symmetric complex Gaussian with unit total variance.
  std::complex<double> next_cn01() {
    auto [x, y] = next_normal_pair();
    const double s = std::numbers::sqrt2 / 2.0;
    return {x * s, y * s};
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace wpcn
