#pragma once

#include <compare>
#include <cstdint>

namespace addrhop {

using u128 = unsigned __int128;

// Binary fraction in [0, 1] with 64 fractional bits. The value is raw / 2^64,
// except that 1.0 saturates to raw = 2^64 - 1.
class Fraction {
 public:
  constexpr Fraction() = default;

  static constexpr Fraction from_raw(std::uint64_t raw) { return Fraction(raw); }
  static constexpr Fraction zero() { return Fraction(0); }
  static constexpr Fraction one() { return Fraction(~std::uint64_t{0}); }

  // num / den rounded to nearest (ties to even). Requires num <= den, den > 0.
  static Fraction from_ratio(std::uint64_t num, std::uint64_t den);

  constexpr std::uint64_t raw() const { return raw_; }
  constexpr bool is_one() const { return raw_ == ~std::uint64_t{0}; }

  // 1 - this, with 1 - 0 saturating to one().
  constexpr Fraction complement() const {
    return raw_ == 0 ? one() : Fraction(~raw_ + 1);
  }

  // Diagnostics only; never used on the digest path.
  double to_double() const;

  friend constexpr auto operator<=>(Fraction, Fraction) = default;

 private:
  constexpr explicit Fraction(std::uint64_t raw) : raw_(raw) {}
  std::uint64_t raw_ = 0;
};

// Quotient of num / den rounded to nearest, ties to even. den must be nonzero.
u128 div_round_even(u128 num, u128 den);

}  // namespace addrhop
