#include "addrhop/timesync.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace addrhop {

std::int64_t max_eta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("max_eta: delta must be positive");
  double bound = 1.0 / (2.0 * delta);
  // 1 / (2 * 1e-6) lands a few ulps away from 500000; snap to the integer.
  const double nearest = std::round(bound);
  if (std::abs(bound - nearest) <= 1e-9 * bound) bound = nearest;
  if (bound > 9.0e18) throw std::overflow_error("max_eta: bound exceeds 64-bit range");
  return static_cast<std::int64_t>(std::ceil(bound)) - 1;
}

bool SyncPolicy::satisfies_bound(double delta) const {
  if (delta <= 0.0) return true;
  return eta <= max_eta(delta);
}

double worst_skew(double delta, double eta) {
  if (delta < 0.0 || eta < 0.0) throw std::invalid_argument("worst_skew: arguments must be non-negative");
  return 2.0 * delta * eta;
}

SyncExchange coarse_sync(const DriftClock& server, const DriftClock& client, ExchangeDelays delays,
                         double start) {
  if (delays.request < 0.0 || delays.reply < 0.0) throw std::invalid_argument("coarse_sync: delays must be non-negative");
  SyncExchange ex{};
  ex.t1 = client.read(start);
  ex.t2 = server.read(start + delays.request);
  ex.t3 = ex.t2;
  ex.t4 = client.read(start + delays.request + delays.reply);
  ex.offset_estimate = ((ex.t2 - ex.t1) + (ex.t3 - ex.t4)) / 2.0;
  ex.corrected = client;
  ex.corrected.offset += ex.offset_estimate;
  return ex;
}

bool agreement_check(std::span<const DriftClock> clocks, const SyncPolicy& policy, double zeta,
                     std::int64_t horizon, ExchangeDelays delays) {
  if (!(zeta > 0.0)) throw std::invalid_argument("agreement_check: zeta must be positive");
  if (policy.eta < 1) throw std::invalid_argument("agreement_check: eta must be at least 1");
  if (std::abs(policy.tau - zeta * static_cast<double>(policy.eta)) > 1e-9 * policy.tau)
    throw std::invalid_argument("agreement_check: tau must equal zeta * eta");
  if (clocks.empty()) return true;

  const DriftClock reference{};
  std::vector<DriftClock> local(clocks.begin(), clocks.end());
  for (std::int64_t period = 0; period < horizon; ++period) {
    const double sync_time = static_cast<double>(period) * policy.tau;
    for (DriftClock& c : local) c = coarse_sync(reference, c, delays, sync_time).corrected;
    for (std::int64_t hop = 0; hop < policy.eta; ++hop) {
      const double t = sync_time + (static_cast<double>(hop) + 0.5) * zeta;
      const double first = std::floor(local.front().read(t) / zeta);
      for (std::size_t i = 1; i < local.size(); ++i)
        if (std::floor(local[i].read(t) / zeta) != first) return false;
    }
  }
  return true;
}

}  // namespace addrhop
