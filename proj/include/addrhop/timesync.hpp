#pragma once

#include <cstdint>
#include <span>

namespace addrhop {

// Local clock reading offset + (1 + drift) * t at true time t.
struct DriftClock {
  double drift = 0.0;   // seconds per second
  double offset = 0.0;  // seconds

  double read(double true_time) const { return offset + (1.0 + drift) * true_time; }
  // True time at which this clock reads local_time.
  double true_time_of(double local_time) const { return (local_time - offset) / (1.0 + drift); }
};

struct SyncPolicy {
  std::int64_t eta = 1;  // hops per sync period
  double tau = 1.0;      // seconds, zeta * eta

  static SyncPolicy for_hops(double zeta, std::int64_t eta) { return {eta, zeta * static_cast<double>(eta)}; }

  // Whether eta < 1 / (2 delta).
  bool satisfies_bound(double delta) const;
};

// Largest integer eta with 2 * delta * eta < 1. Throws if delta <= 0.
std::int64_t max_eta(double delta);

// 2 * delta * eta: worst timestamp divergence between two clocks over one sync period.
double worst_skew(double delta, double eta);

// One-way delays of the request (client -> server) and reply legs.
struct ExchangeDelays {
  double request = 0.0;
  double reply = 0.0;
};

struct SyncExchange {
  double t1, t2, t3, t4;  // client send, server receive, server send, client receive
  double offset_estimate;
  DriftClock corrected;
};

// Four-timestamp offset exchange started at true time start. The client's
// offset moves by ((t2 - t1) + (t3 - t4)) / 2.
SyncExchange coarse_sync(const DriftClock& server, const DriftClock& client, ExchangeDelays delays,
                         double start = 0.0);

// Simulates `horizon` sync periods against a drift-free reference: each clock
// is resynchronized at the start of every period using `delays`, then the
// integer counters floor(read / zeta) are compared at every hop midpoint.
// Returns true iff all clocks agree at every sample.
bool agreement_check(std::span<const DriftClock> clocks, const SyncPolicy& policy, double zeta,
                     std::int64_t horizon, ExchangeDelays delays = {});

}  // namespace addrhop
