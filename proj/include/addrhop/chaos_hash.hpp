#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "addrhop/fraction.hpp"

namespace addrhop {

// Alternating-bit seeds 0.1010...10 and 0.0101...01.
inline constexpr Fraction kDefaultS0 = Fraction::from_raw(0xAAAAAAAAAAAAAAAAULL);
inline constexpr Fraction kDefaultT0 = Fraction::from_raw(0x5555555555555555ULL);

// Bounds applied to every tent-map peak before use.
inline constexpr std::uint64_t kAlphaMinRaw = std::uint64_t{1} << 48;
inline constexpr std::uint64_t kAlphaMaxRaw = ~std::uint64_t{0} - (std::uint64_t{1} << 48) + 1;

struct HashParams {
  unsigned l = 16;  // block size in bits
  unsigned n = 75;  // tent-map rounds per block
  Fraction s0 = kDefaultS0;
  Fraction t0 = kDefaultT0;

  // Throws std::invalid_argument unless 8 <= l <= 64, n >= 1, s0 and t0 in (0, 1).
  void validate() const;

  friend bool operator==(const HashParams&, const HashParams&) = default;
};

class Digest {
 public:
  Digest(u128 bits, unsigned width);

  u128 bits() const { return bits_; }
  unsigned width() const { return width_; }

  // Lowest 64 bits; the whole digest when width <= 64.
  std::uint64_t low64() const { return static_cast<std::uint64_t>(bits_); }

  std::string to_hex() const;
  std::string to_binary() const;

  friend bool operator==(const Digest&, const Digest&) = default;

 private:
  u128 bits_;
  unsigned width_;
};

Fraction clamp_alpha(Fraction alpha);

// Skew tent map G_alpha: y / alpha on [0, alpha], (1 - y) / (1 - alpha) above.
// alpha is clamped to [2^-16, 1 - 2^-16] first.
Fraction tent_step(Fraction y, Fraction alpha);

// Tent-map hash of an arbitrary non-empty byte string into 2l bits.
Digest digest(std::span<const std::uint8_t> message, const HashParams& params);

// 64-bit big-endian encoding of a timestamp counter.
std::vector<std::uint8_t> encode_timestamp(std::uint64_t ts);

Digest digest_timestamp(std::uint64_t ts, const HashParams& params);

// The x least significant bits of d. Throws if x > d.width().
u128 h_x(const Digest& d, unsigned x);

struct WhitenessReport {
  std::uint64_t count = 0;
  std::uint64_t start = 0;
  unsigned x = 0;
  // autocorrelation[k] for k = 0..max_lag; autocorrelation[0] == 1.
  std::vector<double> autocorrelation;
  // 4 / sqrt(count)
  double band = 0.0;
  unsigned bins = 0;
  double chi_square = 0.0;
  double chi_square_p = 0.0;  // upper-tail probability

  bool lags_within_band() const;
};

// Sample autocorrelation and chi-square uniformity of h_x over the consecutive
// timestamps start, start + 1, ..., start + count - 1. Bins are 2^x, halved
// until each bin expects at least five samples.
WhitenessReport whiteness_report(const HashParams& params, unsigned x, std::uint64_t count,
                                 unsigned max_lag, std::uint64_t start = 3000000);

}  // namespace addrhop
