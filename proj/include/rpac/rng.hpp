#pragma once

#include <cstdint>

namespace rpac {

// Counter-based Gaussian source. Every variate is a pure function of
// (seed, stream, index): two SplitMix64-finalized 64-bit words are turned into
// uniforms on (0, 1) and combined with the Box-Muller cosine branch. Draws are
// reproducible across runs and thread counts for a given build; bitwise
// agreement across platforms depends on the libm log/cos.
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) noexcept : seed_(seed) {}

  double uniform(std::uint64_t stream, std::uint64_t index) const noexcept;
  double normal(std::uint64_t stream, std::uint64_t index) const noexcept;

  static std::uint64_t mix(std::uint64_t x) noexcept;

 private:
  std::uint64_t seed_;
};

}  // namespace rpac
