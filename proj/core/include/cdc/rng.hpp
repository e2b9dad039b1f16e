#pragma once

#include <cmath>
#include <cstdint>

namespace cdc {

/// Counter-free splittable 64-bit generator (Steele et al. splitmix64 finalizer).
/// Used everywhere randomness is needed so that datasets are bit-reproducible
/// across platforms; the algorithm identifier is recorded in dataset metadata.
class SplitMix64 {
 public:
  static constexpr const char* kId = "splitmix64-v1";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased bounded draw (rejection on the top chunk).
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % bound;
  }

  /// Standard normal via Box-Muller (uses two draws, no cached spare).
  double next_normal();

 private:
  std::uint64_t state_;
};

/// Deterministically derive an independent stream seed from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 g(base ^ (0xd1342543de82ef95ULL * (stream + 1)));
  return g.next();
}

inline double SplitMix64::next_normal() {
  // u1 in (0,1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  constexpr double two_pi = 6.283185307179586476925286766559;
  double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(two_pi * u2);
}

}  // namespace cdc
