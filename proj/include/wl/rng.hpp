#pragma once

#include <cmath>
#include <cstdint>

namespace wl {

// Counter-based stream: output(i) = mix64(key + i * GOLDEN), the stateless form
// of SplitMix64. Streams for different (seed, stream) pairs are derived by
// avalanche-mixing the pair into the key, so trajectories are independent and
// any prefix of a stream is independent of how far it is consumed.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(mix64(seed + kGolden) ^ mix64(stream + 0x94D049BB133111EBull))) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform in (0, 1]; never returns 0 so -log(u) stays finite.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Exponential holding time with the given total rate.
  double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace wl
