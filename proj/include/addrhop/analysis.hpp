#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace addrhop {

// m addresses shared by k hopping nodes and h statically addressed nodes.
struct CollisionScenario {
  std::uint64_t m = 0;
  std::uint64_t k = 1;
  std::uint64_t h = 0;

  void validate() const;
};

// 1 - prod_{i<k} (m - h - i) / m.
double collision_prob(const CollisionScenario& sc);

// Fraction of trials in which k uniform draws from [0, m) either repeat or hit
// one of the h reserved addresses. Deterministic for a fixed seed.
double collision_mc(const CollisionScenario& sc, std::uint64_t trials, std::uint64_t seed);

struct LossModel {
  double d = 0.0;       // network delay, seconds
  double lambda = 0.0;  // retention, seconds
  double zeta = 1.0;    // hop period, seconds

  void validate() const;
};

// max(0, d - lambda) / zeta. Throws when d - lambda >= zeta.
double expected_loss(const LossModel& lm);

struct StatSummary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> ci95_low;
  std::optional<double> ci95_high;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const StatSummary&, const StatSummary&) = default;
};

// Mean, extremes and the normal-approximation interval mean +- 1.96 s / sqrt(n).
// The interval is left empty for a single sample.
StatSummary summarize(std::span<const double> samples);

}  // namespace addrhop
