#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace groves {

// SplitMix64 (Steele, Lea & Flood 2014). Chosen because the update and the
// output mix are plain 64-bit integer arithmetic, so streams reproduce
// bit-for-bit on every platform, and because an independent child stream can
// be derived from (key, index) in O(1). Dataset generation keys one stream
// per instance index, which is what makes sharded generation deterministic.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1); never exactly 0, so it is safe under log().
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_uniform(double low, double high) {
    return low + (high - low) * next_unit();
  }

  // Box-Muller, cosine branch only: every draw consumes exactly two
  // uniforms, so the stream position never depends on earlier outcomes.
  double next_normal(double mean, double stddev) {
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  int next_index(int size) {
    const int i = static_cast<int>(next_unit() * static_cast<double>(size));
    return i >= size ? size - 1 : i;
  }

  // Derives an independent child key from (key, index).
  static std::uint64_t mix(std::uint64_t key, std::uint64_t index) {
    std::uint64_t z = key + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace groves
