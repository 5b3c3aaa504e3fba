#include "addrhop/fraction.hpp"

#include <cmath>
#include <stdexcept>

namespace addrhop {

u128 div_round_even(u128 num, u128 den) {
  const u128 q = num / den;
  const u128 r = num % den;
  // compare 2r with den without overflowing
  const u128 half = den - r;
  if (r > half || (r == half && (q & 1) != 0)) return q + 1;
  return q;
}

Fraction Fraction::from_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0 || num > den) throw std::invalid_argument("Fraction::from_ratio: need 0 <= num <= den, den > 0");
  const u128 q = div_round_even(static_cast<u128>(num) << 64, den);
  if (q >> 64) return one();
  return from_raw(static_cast<std::uint64_t>(q));
}

double Fraction::to_double() const {
  if (is_one()) return 1.0;
  return std::ldexp(static_cast<double>(raw_), -64);
}

}  // namespace addrhop
