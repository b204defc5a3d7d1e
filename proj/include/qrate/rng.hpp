#pragma once

#include <cstdint>

#include "qrate/normal.hpp"

namespace qrate {

/// SplitMix64 finalizer (Steele/Lea/Flood).
inline std::uint64_t split_mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream key for the (seed, a, b) triple, e.g. (master_seed, n, replicate).
/// Pure finalizer chain, so the same triple always addresses the same
/// substream regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t key = split_mix64(seed);
  key = split_mix64(key ^ split_mix64(a ^ 0xA0761D6478BD642FULL));
  key = split_mix64(key ^ split_mix64(b ^ 0xE7037ED1A0B428DBULL));
  return key;
}

/// SplitMix64 in counter mode: output i is the finalizer applied to
/// key + i·golden-ratio.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    return CounterRng(derive_seed(seed, a, b));
  }

  std::uint64_t next_u64() { return split_mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  /// Uniform on the open interval (0,1); 53 mantissa bits.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  /// Standard normal by inverse-CDF transform (platform-stable).
  double next_normal() { return std_normal_quantile(next_uniform()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace qrate
