#pragma once

#include <cstdint>

namespace mfoc::rng {

// Counter-based generator: the value at index i of a stream keyed by `seed`
// is a pure function of (seed, i), so draws are reproducible regardless of
// execution order, platform, or thread count. The mixer is splitmix64.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream(std::uint64_t seed, std::uint64_t index) {
  return mix(seed + (index + 1) * kGolden);
}

/// Uniform double in [0, 1) from stream position `index`.
constexpr double uniform01(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(stream(seed, index) >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
constexpr double uniform(std::uint64_t seed, std::uint64_t index, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, index);
}

/// Documented seed-derivation scheme for studies: chained splitmix steps over
/// (base, kind, n, trial). Every CSV row's seed is recomputable from these.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t kind, std::uint64_t n,
                                    std::uint64_t trial) {
  std::uint64_t s = mix(base + (kind + 1) * kGolden);
  s = mix(s + (n + 1) * kGolden);
  s = mix(s + (trial + 1) * kGolden);
  return s;
}

/// A stream with an internal counter, for call sites that consume a variable
/// number of draws.
class Counter {
 public:
  explicit Counter(std::uint64_t seed) : seed_(seed) {}
  double uniform01() { return rng::uniform01(seed_, index_++); }
  double uniform(double lo, double hi) { return rng::uniform(seed_, index_++, lo, hi); }
  std::uint64_t index() const { return index_; }

 private:
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

}  // namespace mfoc::rng
