#include "addrhop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "addrhop/rng.hpp"

namespace addrhop {

void CollisionScenario::validate() const {
  if (k < 1) throw std::invalid_argument("CollisionScenario: need k >= 1");
  if (m == 0 || h + k > m) throw std::invalid_argument("CollisionScenario: need h + k <= m");
}

double collision_prob(const CollisionScenario& sc) {
  sc.validate();
  const double m = static_cast<double>(sc.m);
  double survive = 1.0;
  for (std::uint64_t i = 0; i < sc.k; ++i) survive *= static_cast<double>(sc.m - sc.h - i) / m;
  return std::clamp(1.0 - survive, 0.0, 1.0);
}

double collision_mc(const CollisionScenario& sc, std::uint64_t trials, std::uint64_t seed) {
  sc.validate();
  if (trials == 0) throw std::invalid_argument("collision_mc: need at least one trial");
  Rng rng(seed);
  std::vector<std::uint64_t> seen;
  seen.reserve(sc.k);
  std::uint64_t hits = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    seen.clear();
    bool collided = false;
    for (std::uint64_t i = 0; i < sc.k; ++i) {
      const std::uint64_t a = rng.below(sc.m);
      // addresses [0, h) are the static ones
      if (a < sc.h || std::find(seen.begin(), seen.end(), a) != seen.end()) collided = true;
      seen.push_back(a);
    }
    if (collided) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

void LossModel::validate() const {
  if (!(d >= 0.0)) throw std::invalid_argument("LossModel: d must be non-negative");
  if (!(zeta > 0.0)) throw std::invalid_argument("LossModel: zeta must be positive");
  if (!(lambda >= 0.0) || !(lambda < zeta)) throw std::invalid_argument("LossModel: need 0 <= lambda < zeta");
}

double expected_loss(const LossModel& lm) {
  lm.validate();
  const double window = lm.d - lm.lambda;
  if (window >= lm.zeta) throw std::invalid_argument("expected_loss: d - lambda >= zeta is outside the model");
  return std::max(0.0, window) / lm.zeta;
}

StatSummary summarize(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("summarize: no samples");
  StatSummary s;
  s.n = samples.size();
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  s.min = *lo;
  s.max = *hi;
  // keep mean inside [min, max] despite rounding
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    const double half = 1.96 * sd / std::sqrt(static_cast<double>(s.n));
    s.ci95_low = s.mean - half;
    s.ci95_high = s.mean + half;
  }
  return s;
}

}  // namespace addrhop
