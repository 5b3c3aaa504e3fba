#include "addrhop/chaos_hash.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "addrhop/stats.hpp"

namespace addrhop {
namespace {

constexpr std::uint64_t kReseed = 0x5A5A5A5A5A5A5AA5ULL;
constexpr int kRotateIntoS = 23;
constexpr int kRotateIntoT = 41;

constexpr u128 kOne = u128{1} << 64;

Fraction saturate(u128 q) {
  if (q >> 64) return Fraction::one();
  return Fraction::from_raw(static_cast<std::uint64_t>(q));
}

// Keeps the state off the tent map's fixed points 0 and 1.
Fraction renormalize(Fraction f) {
  if (f.raw() == 0 || f.is_one()) return Fraction::from_raw(f.raw() ^ kReseed);
  return f;
}

// Splits the message, padded with a single 1 bit, zeros to the next multiple
// of l, and a trailing l-bit big-endian length block, into l-bit blocks.
std::vector<std::uint64_t> padded_blocks(std::span<const std::uint8_t> message, unsigned l) {
  const std::uint64_t msg_bits = static_cast<std::uint64_t>(message.size()) * 8;
  const std::uint64_t padded_bits = (msg_bits / l + 1) * l;
  const std::uint64_t block_count = padded_bits / l + 1;

  auto bit_at = [&](std::uint64_t i) -> std::uint64_t {
    if (i < msg_bits) return (message[i / 8] >> (7 - i % 8)) & 1U;
    return i == msg_bits ? 1 : 0;
  };

  std::vector<std::uint64_t> blocks;
  blocks.reserve(block_count);
  for (std::uint64_t b = 0; b + 1 < block_count; ++b) {
    std::uint64_t block = 0;
    for (unsigned j = 0; j < l; ++j) block = (block << 1) | bit_at(b * l + j);
    blocks.push_back(block);
  }
  const std::uint64_t mask = l == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << l) - 1;
  blocks.push_back(msg_bits & mask);
  return blocks;
}

}  // namespace

void HashParams::validate() const {
  if (l < 8 || l > 64) throw std::invalid_argument("HashParams: block size l must be in [8, 64]");
  if (n < 1) throw std::invalid_argument("HashParams: rounds n must be at least 1");
  if (s0.raw() == 0 || s0.is_one() || t0.raw() == 0 || t0.is_one())
    throw std::invalid_argument("HashParams: s0 and t0 must lie strictly inside (0, 1)");
}

Digest::Digest(u128 bits, unsigned width) : bits_(bits), width_(width) {
  if (width == 0 || width > 128) throw std::invalid_argument("Digest: width must be in [1, 128]");
  if (width < 128) bits_ &= (u128{1} << width) - 1;
}

std::string Digest::to_hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  const unsigned digits = (width_ + 3) / 4;
  std::string out(digits, '0');
  u128 v = bits_;
  for (unsigned i = 0; i < digits; ++i, v >>= 4) out[digits - 1 - i] = kHex[static_cast<unsigned>(v & 0xF)];
  return out;
}

std::string Digest::to_binary() const {
  std::string out(width_, '0');
  for (unsigned i = 0; i < width_; ++i)
    if ((bits_ >> i) & 1) out[width_ - 1 - i] = '1';
  return out;
}

Fraction clamp_alpha(Fraction alpha) {
  if (alpha.raw() < kAlphaMinRaw) return Fraction::from_raw(kAlphaMinRaw);
  if (alpha.raw() > kAlphaMaxRaw) return Fraction::from_raw(kAlphaMaxRaw);
  return alpha;
}

Fraction tent_step(Fraction y, Fraction alpha) {
  alpha = clamp_alpha(alpha);
  const std::uint64_t a = alpha.raw();
  const std::uint64_t v = y.raw();
  if (v <= a) {
    if (v == a) return Fraction::one();
    return saturate(div_round_even(static_cast<u128>(v) << 64, a));
  }
  // y == one() stands for exactly 1.0, which maps to 0.
  if (y.is_one()) return Fraction::zero();
  const u128 rest = kOne - v;
  const u128 span = kOne - a;
  return saturate(div_round_even(rest << 64, span));
}

Digest digest(std::span<const std::uint8_t> message, const HashParams& params) {
  params.validate();
  if (message.empty()) throw std::invalid_argument("digest: message must be non-empty");

  const unsigned l = params.l;
  Fraction s = params.s0;
  Fraction t = params.t0;
  for (std::uint64_t block : padded_blocks(message, l)) {
    const std::uint64_t spread = l == 64 ? block : block << (64 - l);
    const Fraction alpha = clamp_alpha(Fraction::from_raw(spread ^ t.raw()));
    const Fraction beta = alpha.complement();
    for (unsigned r = 0; r < params.n; ++r) {
      s = tent_step(s, alpha);
      t = renormalize(tent_step(t, beta));
      s = renormalize(Fraction::from_raw(s.raw() ^ std::rotl(t.raw(), kRotateIntoS)));
      t = renormalize(Fraction::from_raw(t.raw() ^ std::rotl(s.raw(), kRotateIntoT)));
    }
  }
  const u128 s_top = s.raw() >> (64 - l);
  const u128 t_top = t.raw() >> (64 - l);
  return Digest((s_top << l) | t_top, 2 * l);
}

std::vector<std::uint8_t> encode_timestamp(std::uint64_t ts) {
  std::vector<std::uint8_t> out(8);
  for (int i = 7; i >= 0; --i, ts >>= 8) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(ts & 0xFF);
  return out;
}

Digest digest_timestamp(std::uint64_t ts, const HashParams& params) {
  const auto bytes = encode_timestamp(ts);
  return digest(bytes, params);
}

u128 h_x(const Digest& d, unsigned x) {
  if (x > d.width()) throw std::invalid_argument("h_x: cannot take more bits than the digest holds");
  if (x == 128) return d.bits();
  return d.bits() & ((u128{1} << x) - 1);
}

bool WhitenessReport::lags_within_band() const {
  for (std::size_t k = 1; k < autocorrelation.size(); ++k)
    if (std::abs(autocorrelation[k]) >= band) return false;
  return true;
}

WhitenessReport whiteness_report(const HashParams& params, unsigned x, std::uint64_t count,
                                 unsigned max_lag, std::uint64_t start) {
  params.validate();
  if (count < 1000) throw std::invalid_argument("whiteness_report: need at least 1000 samples");
  if (x < 1 || x > 2 * params.l || x > 64) throw std::invalid_argument("whiteness_report: x must be in [1, min(2l, 64)]");
  if (max_lag >= count) throw std::invalid_argument("whiteness_report: max_lag must be below the sample count");

  unsigned bin_bits = x;
  while (bin_bits > 1 && (static_cast<double>(count) / std::ldexp(1.0, static_cast<int>(bin_bits))) < 5.0) --bin_bits;

  WhitenessReport report;
  report.count = count;
  report.start = start;
  report.x = x;
  report.bins = 1U << bin_bits;
  report.band = 4.0 / std::sqrt(static_cast<double>(count));

  std::vector<double> seq(count);
  std::vector<std::uint64_t> hist(report.bins, 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto host = static_cast<std::uint64_t>(h_x(digest_timestamp(start + i, params), x));
    seq[i] = static_cast<double>(host);
    ++hist[host >> (x - bin_bits)];
  }

  report.autocorrelation = sample_autocorrelation(seq, max_lag);

  const double expected = static_cast<double>(count) / report.bins;
  double chi2 = 0.0;
  for (std::uint64_t c : hist) {
    const double diff = static_cast<double>(c) - expected;
    chi2 += diff * diff / expected;
  }
  report.chi_square = chi2;
  report.chi_square_p = chi_square_upper_tail(chi2, report.bins - 1.0);
  return report;
}

}  // namespace addrhop
