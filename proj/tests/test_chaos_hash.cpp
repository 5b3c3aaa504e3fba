#include <doctest.h>

#include <bit>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "addrhop/chaos_hash.hpp"
#include "addrhop/stats.hpp"

using namespace addrhop;

namespace {

Fraction half() { return Fraction::from_raw(std::uint64_t{1} << 63); }
Fraction quarter() { return Fraction::from_raw(std::uint64_t{1} << 62); }

int popcount128(u128 v) {
  return std::popcount(static_cast<std::uint64_t>(v)) + std::popcount(static_cast<std::uint64_t>(v >> 64));
}

}  // namespace

TEST_CASE("fraction rounding") {
  CHECK(Fraction::from_ratio(1, 2) == half());
  CHECK(Fraction::from_ratio(1, 1) == Fraction::one());
  CHECK(Fraction::from_ratio(0, 7) == Fraction::zero());
  // 2^64 / 3 = 6148914691236517205.33 -> rounds down
  CHECK(Fraction::from_ratio(1, 3).raw() == 6148914691236517205ULL);
  CHECK(Fraction::from_ratio(2, 3).raw() == 12297829382473034411ULL);
  CHECK_THROWS_AS(Fraction::from_ratio(3, 2), std::invalid_argument);
  CHECK(div_round_even(5, 2) == 2);  // tie to even
  CHECK(div_round_even(7, 2) == 4);
  CHECK(half().complement() == half());
  CHECK(Fraction::zero().complement() == Fraction::one());
}

TEST_CASE("tent_step examples") {
  const Fraction alpha = Fraction::from_ratio(3, 10);
  CHECK(tent_step(Fraction::zero(), alpha) == Fraction::zero());
  CHECK(tent_step(alpha, alpha) == Fraction::one());
  CHECK(tent_step(half(), quarter()) == Fraction::from_ratio(2, 3));
  // left branch: 1/8 over 1/4
  CHECK(tent_step(Fraction::from_raw(std::uint64_t{1} << 61), quarter()) == half());
  CHECK(tent_step(Fraction::one(), alpha) == Fraction::zero());
}

TEST_CASE("tent_step clamps alpha") {
  const Fraction y = Fraction::from_raw(12345);
  CHECK(tent_step(y, Fraction::zero()) == tent_step(y, Fraction::from_raw(kAlphaMinRaw)));
  CHECK(tent_step(y, Fraction::one()) == tent_step(y, Fraction::from_raw(kAlphaMaxRaw)));
  CHECK(clamp_alpha(half()) == half());
}

TEST_CASE("tent_step stays within one ulp of the real-valued map") {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 2000; ++i) {
    const Fraction y = Fraction::from_raw(gen());
    const Fraction a = clamp_alpha(Fraction::from_raw(gen()));
    const long double yv = std::ldexp(static_cast<long double>(y.raw()), -64);
    const long double av = std::ldexp(static_cast<long double>(a.raw()), -64);
    const long double expect = yv <= av ? yv / av : (1.0L - yv) / (1.0L - av);
    const long double got = std::ldexp(static_cast<long double>(tent_step(y, a).raw()), -64);
    CHECK(std::abs(got - expect) < 1e-15L);
  }
}

TEST_CASE("hash params validation") {
  HashParams p;
  CHECK_NOTHROW(p.validate());
  p.l = 7;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.l = 65;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HashParams{};
  p.n = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HashParams{};
  p.s0 = Fraction::zero();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = HashParams{};
  p.t0 = Fraction::one();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("digest is deterministic and 2l bits wide") {
  const HashParams p;
  const Digest a = digest_timestamp(3000000, p);
  const Digest b = digest_timestamp(3000000, p);
  CHECK(a == b);
  CHECK(a.width() == 32);
  for (unsigned l : {8U, 16U, 24U, 32U, 64U}) {
    HashParams q;
    q.l = l;
    q.n = 10;
    for (std::uint64_t ts = 0; ts < 50; ++ts) {
      const Digest d = digest_timestamp(ts, q);
      CHECK(d.width() == 2 * l);
      if (l < 64) CHECK((d.bits() >> (2 * l)) == 0);
    }
  }
}

TEST_CASE("digest golden vectors") {
  // Frozen from the first build; a change here changes every address sequence.
  const HashParams p;
  CHECK(digest_timestamp(3000000, p).to_hex() == "bb1bc102");
  CHECK(digest_timestamp(3000000, p).to_binary() == "10111011000110111100000100000010");
  CHECK(static_cast<unsigned>(h_x(digest_timestamp(3000000, p), 8)) == 2);
  CHECK(static_cast<unsigned>(h_x(digest_timestamp(3000005, p), 8)) == 224);
}

TEST_CASE("digest rejects empty input and distinguishes padding") {
  const HashParams p;
  CHECK_THROWS_AS(digest(std::span<const std::uint8_t>{}, p), std::invalid_argument);
  const std::vector<std::uint8_t> one{0x01};
  const std::vector<std::uint8_t> zero_one{0x00, 0x01};
  const std::vector<std::uint8_t> one_zero{0x01, 0x00};
  CHECK_FALSE(digest(one, p) == digest(zero_one, p));
  CHECK_FALSE(digest(one, p) == digest(one_zero, p));
}

TEST_CASE("encode_timestamp is big-endian") {
  const auto bytes = encode_timestamp(0x0102030405060708ULL);
  CHECK(bytes == std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("h_x takes the least significant bits") {
  // Table 1 rows: ...10000111 -> 135, ...00010010 -> 18
  CHECK(h_x(Digest(0xABCD0087, 32), 8) == 135);
  CHECK(h_x(Digest(0x12345612, 32), 8) == 18);
  CHECK(h_x(Digest(0xFFFFFFFE, 32), 1) == 0);
  CHECK(h_x(Digest(0xFFFFFFFF, 32), 0) == 0);
  CHECK(h_x(Digest(0xFFFFFFFF, 32), 32) == 0xFFFFFFFF);
  CHECK_THROWS_AS(h_x(Digest(1, 32), 33), std::invalid_argument);
}

TEST_CASE("avalanche: each output bit flips with probability in [0.4, 0.6]") {
  const HashParams p;
  constexpr int kTrials = 10000;
  std::mt19937_64 gen(2024);
  std::vector<int> flips(32, 0);
  for (int i = 0; i < kTrials; ++i) {
    const std::uint64_t ts = gen() >> 16;
    const int bit = static_cast<int>(gen() % 64);
    const u128 diff = digest_timestamp(ts, p).bits() ^ digest_timestamp(ts ^ (std::uint64_t{1} << bit), p).bits();
    for (int j = 0; j < 32; ++j) flips[j] += static_cast<int>((diff >> j) & 1);
  }
  for (int j = 0; j < 32; ++j) {
    const double rate = flips[j] / static_cast<double>(kTrials);
    CHECK(rate >= 0.4);
    CHECK(rate <= 0.6);
  }
}

TEST_CASE("adjacent timestamps differ in about half the bits") {
  const HashParams p;
  double total = 0.0;
  constexpr int kPairs = 10000;
  for (int i = 0; i < kPairs; ++i)
    total += popcount128(digest_timestamp(3000000 + i, p).bits() ^ digest_timestamp(3000001 + i, p).bits());
  const double mean = total / kPairs;
  // binomial(32, 1/2) mean 16, standard error 2.83 / 100
  CHECK(mean == doctest::Approx(16.0).epsilon(0.02));
}

TEST_CASE("key sensitivity: flipping the lowest bit of s0 changes about half the bits") {
  HashParams p;
  HashParams q = p;
  q.s0 = Fraction::from_raw(p.s0.raw() ^ 1);
  double total = 0.0;
  constexpr int kSamples = 2000;
  for (int i = 0; i < kSamples; ++i)
    total += popcount128(digest_timestamp(3000000 + i, p).bits() ^ digest_timestamp(3000000 + i, q).bits());
  CHECK(total / kSamples == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("chi_square_upper_tail matches an independent implementation") {
  for (double dof : {1.0, 2.0, 7.0, 31.0, 255.0}) {
    const boost::math::chi_squared dist(dof);
    for (double q : {0.001, 0.05, 0.5, 0.95, 0.999}) {
      const double x = boost::math::quantile(dist, q);
      CHECK(chi_square_upper_tail(x, dof) == doctest::Approx(1.0 - q).epsilon(1e-8));
    }
  }
  CHECK(chi_square_upper_tail(0.0, 3.0) == 1.0);
}

TEST_CASE("sample autocorrelation") {
  const std::vector<double> alt{1, -1, 1, -1, 1, -1, 1, -1};
  const auto r = sample_autocorrelation(alt, 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == doctest::Approx(-7.0 / 8.0));
  CHECK(r[2] == doctest::Approx(6.0 / 8.0));
  const std::vector<double> flat{2, 2, 2};
  CHECK_THROWS_AS(sample_autocorrelation(flat, 1), std::domain_error);
}

TEST_CASE("whiteness report over 1e5 timestamps") {
  const HashParams p;
  const WhitenessReport r = whiteness_report(p, 8, 100000, 100);
  CHECK(r.autocorrelation.size() == 101);
  CHECK(r.autocorrelation[0] == 1.0);
  CHECK(r.band == doctest::Approx(4.0 / std::sqrt(1e5)));
  for (std::size_t k = 1; k <= 100; ++k) CHECK(std::abs(r.autocorrelation[k]) < r.band);
  CHECK(r.lags_within_band());
  CHECK(r.bins == 256);
  const double critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(255.0), 1e-3));
  CHECK(r.chi_square < critical);
  CHECK(r.chi_square_p > 1e-3);
}

TEST_CASE("whiteness report coarsens bins and rejects small samples") {
  const HashParams p;
  const WhitenessReport r = whiteness_report(p, 16, 1000, 5);
  CHECK(r.bins == 128);  // 1000 / 5 = 200 expected-count limit
  CHECK_THROWS_AS(whiteness_report(p, 8, 999, 5), std::invalid_argument);
  CHECK_THROWS_AS(whiteness_report(p, 33, 1000, 5), std::invalid_argument);
}
