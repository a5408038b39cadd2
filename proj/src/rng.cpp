#include "rpac/rng.hpp"

#include <cmath>
#include <numbers>

namespace rpac {

std::uint64_t CounterNormal::mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double CounterNormal::uniform(std::uint64_t stream, std::uint64_t index) const noexcept {
  const std::uint64_t key = mix(mix(mix(seed_) ^ stream) ^ index);
  // 53 random bits, shifted off zero: result lies in (0, 1).
  return (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
}

double CounterNormal::normal(std::uint64_t stream, std::uint64_t index) const noexcept {
  const double u1 = uniform(stream, 2 * index);
  const double u2 = uniform(stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace rpac
