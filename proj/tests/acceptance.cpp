// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.
#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "addrhop/analysis.hpp"
#include "addrhop/chaos_hash.hpp"
#include "addrhop/rng.hpp"
#include "addrhop/sim.hpp"
#include "addrhop/timesync.hpp"
#include "cli.hpp"

using namespace addrhop;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double binomial_sd(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

const std::vector<unsigned> kRanges{8, 16, 64, 256};
const std::vector<unsigned> kHopping{1, 2, 4, 8};
const std::vector<unsigned> kStatic{0, 5};

Verdict collision_grid() {
  constexpr std::uint64_t kTrials = 100000;
  const auto t0 = Clock::now();
  int cells = 0, bad = 0;
  double worst = 0.0;
  for (unsigned m : kRanges)
    for (unsigned k : kHopping)
      for (unsigned h : kStatic) {
        if (h + k > m) continue;
        const CollisionScenario sc{m, k, h};
        const double p = collision_prob(sc);
        const double mc = collision_mc(sc, kTrials, derive_seed(2024, static_cast<std::uint64_t>(cells), 0));
        const double sd = binomial_sd(p, kTrials);
        const double z = sd > 0.0 ? std::abs(mc - p) / sd : (mc == p ? 0.0 : INFINITY);
        worst = std::max(worst, z);
        if (z > 3.0) ++bad;
        ++cells;
      }
  const double elapsed = seconds_since(t0);
  return {bad == 0 && elapsed < 60.0,
          fmt("%d cells, %d outside 3 sigma, worst |z| = %.2f, %.1f s", cells, bad, worst, elapsed)};
}

Verdict collision_trends() {
  constexpr std::uint64_t kTrials = 100000;
  int checks = 0, analytic_bad = 0, mc_bad = 0;
  auto mc = [&](unsigned m, unsigned k, unsigned h) {
    return collision_mc({m, k, h}, kTrials, derive_seed(7, m * 1000003ULL + k * 1009ULL + h, 1));
  };
  auto noise = [&](double a, double b) { return 3.0 * std::hypot(binomial_sd(a, kTrials), binomial_sd(b, kTrials)); };

  for (unsigned m : kRanges)
    for (unsigned k : kHopping) {
      if (k + 5 > m) continue;
      const double p0 = collision_prob({m, k, 0}), p5 = collision_prob({m, k, 5});
      ++checks;
      if (!(p5 > p0)) ++analytic_bad;
      if (mc(m, k, 5) - mc(m, k, 0) < -noise(p0, p5)) ++mc_bad;
    }
  // A single hopping node with no static hosts never collides, so (k=1, h=0) is
  // flat at zero and left out of the strict decrease.
  for (unsigned k : kHopping)
    for (unsigned h : kStatic) {
      if (k == 1 && h == 0) continue;
      for (std::size_t i = 0; i + 1 < kRanges.size(); ++i) {
        const unsigned lo = kRanges[i], hi = kRanges[i + 1];
        if (h + k > lo) continue;
        const double a = collision_prob({lo, k, h}), b = collision_prob({hi, k, h});
        ++checks;
        if (!(b < a)) ++analytic_bad;
        if (mc(hi, k, h) - mc(lo, k, h) > noise(a, b)) ++mc_bad;
      }
    }
  return {analytic_bad == 0 && mc_bad == 0,
          fmt("%d orderings, analytic violations %d, MC outside noise %d", checks, analytic_bad, mc_bad)};
}

Verdict loss_formula() {
  struct Case {
    double d, lambda, zeta, expected;
  };
  const std::vector<Case> cases{{0.5, 0.3, 1.0, 0.2}, {0.5, 0.8, 1.0, 0.0}, {0.5, 0.3, 2.0, 0.1}};
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    SimConfig cfg;
    cfg.delay = DelayModel::deterministic(c.d);
    cfg.lambda = c.lambda;
    cfg.zeta = c.zeta;
    cfg.gamma = 100.0;
    cfg.duration = 1000.0 * c.zeta;
    cfg.seed = 11;
    const auto t0 = Clock::now();
    const Metrics m = run(cfg);
    const double elapsed = seconds_since(t0);
    const double analytic = expected_loss({c.d, c.lambda, c.zeta});
    const bool pass = m.sent >= 100000 && std::abs(m.loss_fraction() - c.expected) <= 0.01 &&
                      std::abs(analytic - c.expected) < 1e-12 && elapsed < 10.0;
    ok = ok && pass;
    detail += fmt("%s(d=%g,l=%g,z=%g) %.4f vs %.1f [%llu pkts, %.2f s]", detail.empty() ? "" : "; ", c.d, c.lambda,
                  c.zeta, m.loss_fraction(), c.expected, static_cast<unsigned long long>(m.sent), elapsed);
  }
  return {ok, detail};
}

Verdict threshold_knee() {
  SimConfig base;
  base.delay = DelayModel::deterministic(0.14);
  base.gamma = 200.0;
  base.duration = 200.0;
  base.seed = 3;
  std::vector<double> zetas;
  for (int i = 1; i <= 20; ++i) zetas.push_back(i / 10.0);
  const ThresholdScan scan = threshold_scan(base, zetas, 0.2, 0.01);
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < scan.curve.size(); ++i)
    if (scan.curve[i + 1].mean_loss > scan.curve[i].mean_loss) monotone = false;
  const bool knee_ok = scan.knee && std::abs(*scan.knee - 0.7) <= 0.1 + 1e-9;
  return {monotone && knee_ok, fmt("non-increasing=%s, knee at zeta=%s (target 0.7 +/- 0.1)", monotone ? "yes" : "no",
                                   scan.knee ? fmt("%g", *scan.knee).c_str() : "none")};
}

Verdict stochastic_orderings() {
  SimConfig base;
  base.delay = DelayModel::shifted_exponential(0.1, 0.3);
  base.gamma = 50.0;
  base.duration = 2000.0;
  base.seed = 17;
  const std::vector<double> zetas{1, 2, 3, 4, 8};
  const std::vector<double> lambdas{0.3, 0.8};
  const auto t0 = Clock::now();
  const auto cells = sweep(base, zetas, lambdas, 5);
  int zeta_bad = 0, lambda_bad = 0;
  std::string means;
  for (std::size_t z = 0; z < zetas.size(); ++z) {
    const double at03 = cells[2 * z].loss.mean, at08 = cells[2 * z + 1].loss.mean;
    if (at08 > at03) ++lambda_bad;
    if (z + 1 < zetas.size()) {
      if (cells[2 * (z + 1)].loss.mean > at03) ++zeta_bad;
      if (cells[2 * (z + 1) + 1].loss.mean > at08) ++zeta_bad;
    }
    means += fmt("%sz=%g:%.4f/%.4f", means.empty() ? "" : " ", zetas[z], at03, at08);
  }
  return {zeta_bad == 0 && lambda_bad == 0,
          fmt("delay shifted_exp:0.1,0.3, 5 paired reps; mean loss l=0.3/l=0.8 %s; violations zeta %d lambda %d; %.1f s",
              means.c_str(), zeta_bad, lambda_bad, seconds_since(t0))};
}

Verdict prng_suite() {
  const HashParams params;
  const WhitenessReport r = whiteness_report(params, 8, 100000, 100);
  const boost::math::chi_squared dist(r.bins - 1.0);
  const double critical = boost::math::quantile(boost::math::complement(dist, 1e-3));
  const bool uniform = r.bins == 256 && r.chi_square < critical && r.chi_square_p > 1e-3;

  double worst_lag = 0.0;
  for (std::size_t k = 1; k < r.autocorrelation.size(); ++k) worst_lag = std::max(worst_lag, std::abs(r.autocorrelation[k]));
  const bool white = r.autocorrelation.size() == 101 && worst_lag <= r.band;

  constexpr int kFlips = 10000;
  std::mt19937_64 gen(99);
  std::vector<int> flips(32, 0);
  for (int i = 0; i < kFlips; ++i) {
    const std::uint64_t ts = gen() >> 16;
    const auto bit = static_cast<unsigned>(gen() % 64);
    const u128 diff = digest_timestamp(ts, params).bits() ^ digest_timestamp(ts ^ (std::uint64_t{1} << bit), params).bits();
    for (int j = 0; j < 32; ++j) flips[j] += static_cast<int>((diff >> j) & 1);
  }
  double lo = 1.0, hi = 0.0;
  for (int f : flips) {
    lo = std::min(lo, f / static_cast<double>(kFlips));
    hi = std::max(hi, f / static_cast<double>(kFlips));
  }
  const bool avalanche = lo >= 0.4 && hi <= 0.6;
  return {uniform && white && avalanche,
          fmt("chi2=%.1f (crit %.1f, p=%.3g); max |rho| lags 1..100 = %.4f (band %.4f); avalanche per bit in [%.3f, %.3f]",
              r.chi_square, critical, r.chi_square_p, worst_lag, r.band, lo, hi)};
}

Verdict sync_safety() {
  const double delta = 1e-4;
  const std::vector<DriftClock> pair{{delta, 0.0}, {-delta, 0.0}};
  const ExchangeDelays delays{0.01, 0.01};
  const bool safe = agreement_check(pair, SyncPolicy::for_hops(1.0, 4000), 1.0, 1000, delays);
  const bool unsafe = !agreement_check(pair, SyncPolicy::for_hops(1.0, 1000000), 1.0, 1000, delays);
  return {safe && unsafe && max_eta(delta) == 4999,
          fmt("bound eta < %lld; over 1000 sync periods: eta=4000 agrees=%s, eta=1e6 disagrees=%s",
              static_cast<long long>(max_eta(delta) + 1), safe ? "yes" : "no", unsafe ? "yes" : "no")};
}

Verdict rerun_identical() {
  const std::vector<std::string> args{"loss", "--zetas", "1,2,4", "--lambdas", "0.3,0.8", "--replications", "3",
                                      "--duration", "200", "--gamma", "50", "--delay", "shifted_exp:0.2,0.1",
                                      "--seed", "42"};
  std::ostringstream a, b, err;
  const int ca = cli::run(args, a, err);
  const int cb = cli::run(args, b, err);

  const auto path = std::filesystem::temp_directory_path() / "addrhop_acceptance_manifest.csv";
  { std::ofstream(path, std::ios::binary) << a.str(); }
  std::ostringstream c;
  const int cc = cli::run({"loss", "--config", path.string()}, c, err);
  std::filesystem::remove(path);
  auto without_config_line = [](const std::string& text) {
    std::string kept;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
      if (!line.starts_with("# config=")) kept += line + '\n';
    return kept;
  };
  const bool same_args = ca == 0 && cb == 0 && a.str() == b.str();
  const bool same_manifest = cc == 0 && without_config_line(c.str()) == without_config_line(a.str());
  return {same_args && same_manifest, fmt("rerun identical=%s, replay from manifest identical=%s (%zu bytes)",
                                          same_args ? "yes" : "no", same_manifest ? "yes" : "no", a.str().size())};
}

Verdict unauthorized_floor() {
  SimConfig cfg;
  cfg.cn_authorized = false;
  cfg.delay = DelayModel::deterministic(0.05);
  cfg.lambda = 0.3;
  cfg.zeta = 1.0;
  cfg.gamma = 10.0;
  cfg.duration = 1000.0;
  cfg.seed = 23;
  const Metrics m = run(cfg);
  const double n = static_cast<double>(m.sent);
  const double p = (1.0 + cfg.lambda / cfg.zeta) / 256.0;
  const double rate = static_cast<double>(m.delivered) / n;
  const double limit = p + 3.0 * binomial_sd(p, n);
  return {m.sent >= 9500 && rate <= limit,
          fmt("%llu of %llu accepted, rate %.5f <= %.5f (floor %.5f + 3 sigma)",
              static_cast<unsigned long long>(m.delivered), static_cast<unsigned long long>(m.sent), rate, limit, p)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"collision Monte Carlo matches the analytic product", collision_grid},
      {"collision probability trends in h and m", collision_trends},
      {"simulated loss matches max(0, d - lambda) / zeta", loss_formula},
      {"loss threshold knee near zeta = 0.7", threshold_knee},
      {"stochastic-delay loss orderings", stochastic_orderings},
      {"hash PRNG statistical suite", prng_suite},
      {"clock sync bound safety", sync_safety},
      {"byte-identical reruns", rerun_identical},
      {"unauthorized CN stays at chance", unauthorized_floor},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::printf("criterion %zu: %s  %s  (%s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
