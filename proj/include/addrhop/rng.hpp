#pragma once

#include <cstdint>
#include <random>

namespace addrhop {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed for an independent stream identified by (seed, node, stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t node, std::uint64_t stream) {
  return mix64(mix64(mix64(seed) ^ node) ^ (stream * 0xD1B54A32D192ED03ULL));
}

// mt19937_64 wrapped with draw routines whose results are fixed by the
// standard engine alone (the <random> distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, bound), unbiased. bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = -bound % bound;  // 2^64 mod bound
    while (true) {
      const std::uint64_t r = engine_();
      if (r >= limit) return r % bound;
    }
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace addrhop
