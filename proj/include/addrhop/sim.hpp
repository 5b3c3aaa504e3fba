#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "addrhop/analysis.hpp"
#include "addrhop/chaos_hash.hpp"
#include "addrhop/kv.hpp"
#include "addrhop/rng.hpp"
#include "addrhop/timesync.hpp"
#include "addrhop/tracking.hpp"

namespace addrhop {

struct DelayModel {
  struct Deterministic {
    double d = 0.0;
    friend bool operator==(const Deterministic&, const Deterministic&) = default;
  };
  struct ShiftedExponential {
    double d_min = 0.0;
    double mean_extra = 0.0;
    friend bool operator==(const ShiftedExponential&, const ShiftedExponential&) = default;
  };
  struct Empirical {
    std::vector<double> samples;
    friend bool operator==(const Empirical&, const Empirical&) = default;
  };

  std::variant<Deterministic, ShiftedExponential, Empirical> kind = Deterministic{};

  static DelayModel deterministic(double d) { return {Deterministic{d}}; }
  static DelayModel shifted_exponential(double d_min, double mean_extra) { return {ShiftedExponential{d_min, mean_extra}}; }
  static DelayModel empirical(std::vector<double> samples) { return {Empirical{std::move(samples)}}; }

  // "deterministic:D", "shifted_exp:DMIN,MEAN_EXTRA" or "empirical:D1,D2,...".
  static DelayModel parse(std::string_view text);
  std::string to_string() const;

  void validate() const;
  double sample(Rng& rng) const;
  double mean() const;

  friend bool operator==(const DelayModel&, const DelayModel&) = default;
};

struct SimConfig {
  double zeta = 1.0;
  double lambda = 0.3;
  double gamma = 100.0;      // CN packet rate, packets per second
  double duration = 1000.0;  // seconds, a multiple of zeta
  DelayModel delay = DelayModel::deterministic(0.05);
  double delta = 0.0;        // clock drift bound; 0 disables drift and periodic sync
  std::int64_t eta = 1000;   // hops per sync period when drift is enabled
  std::uint64_t iot_count = 1;
  std::uint64_t static_count = 0;
  SubnetSpec subnet = SubnetSpec::parse("129.110.242.0/24");
  HashParams hash;
  double processing_delay = 0.0;  // time the IoT node needs to bring up a new address
  bool cn_authorized = true;      // an unauthorized CN guesses host ids uniformly
  std::uint64_t seed = 1;

  void validate() const;

  // Overrides fields from configuration keys (zeta, lambda, gamma, duration,
  // delay, delta, eta, iot_count, static_count, subnet, l, n, s0_hex, t0_hex,
  // processing_delay, cn_authorized, seed). Unknown keys are rejected.
  void apply(const KeyValues& kv);
  // Inverse of apply: every field under its configuration key.
  KeyValues to_kv() const;
};

struct PeriodLoss {
  std::uint64_t sent = 0;
  std::uint64_t lost = 0;
  friend bool operator==(const PeriodLoss&, const PeriodLoss&) = default;
};

struct Metrics {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost_stale_address = 0;
  std::uint64_t checked_periods = 0;
  std::uint64_t collision_periods = 0;
  std::vector<PeriodLoss> per_period;  // indexed by floor(send time / zeta)

  double loss_fraction() const;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Counter value of the monitored node at true time 0; the node's epoch is
// -kEpochHops * zeta so counters start near the values of a running deployment.
inline constexpr std::uint64_t kEpochHops = 3000000;

// Tracking parameters of node `node` for a simulation. Node 0 uses the
// configured hash seeds; other nodes draw their own seeds and counter offsets.
TFParams node_params(const SimConfig& config, std::uint64_t node);

// Schedule of the monitored node, as handed to authorized CNs.
struct ParamBundle {
  HopSchedule schedule;

  std::string serialize() const { return to_kv(schedule); }
  static ParamBundle parse(std::string_view text) { return {schedule_from_kv(text)}; }
  friend bool operator==(const ParamBundle&, const ParamBundle&) = default;
};

struct Challenge {
  std::uint64_t nonce = 0;
};

struct HandshakeResponse {
  std::uint64_t nonce = 0;
  Digest proof{0, 64};
};

// Tent-map digest (l = 32) of psk followed by the big-endian nonce.
Digest handshake_proof(std::string_view psk, std::uint64_t nonce);
HandshakeResponse answer(const Challenge& challenge, std::string_view psk);

struct HandshakeResult {
  std::optional<ParamBundle> bundle;  // empty on rejection
  std::string reason;
  DriftClock cn_clock;  // after the coarse sync exchange (unchanged on rejection)

  bool accepted() const { return bundle.has_value(); }
};

// Trusted coordinator: authenticates CNs by challenge-response over a
// pre-shared secret, then syncs their clock and hands out the bundle.
class CentralNode {
 public:
  CentralNode(std::string psk, ParamBundle bundle, std::uint64_t seed, DriftClock clock = {});

  Challenge challenge();
  // Each nonce is honored at most once.
  HandshakeResult handshake(const HandshakeResponse& response, const DriftClock& cn_clock,
                            ExchangeDelays delays = {}, double now = 0.0);

  const DriftClock& clock() const { return clock_; }

 private:
  std::string psk_;
  std::string wire_bundle_;
  Rng rng_;
  DriftClock clock_;
  std::set<std::uint64_t> outstanding_;
  std::set<std::uint64_t> issued_;
};

// Event-driven run of one CN sending Poisson traffic to the monitored node.
// With `trace`, writes time,event,node,address lines.
Metrics run(const SimConfig& config, std::ostream* trace = nullptr);

struct SweepCell {
  double zeta = 0.0;
  double lambda = 0.0;
  std::uint64_t replications = 0;
  StatSummary loss;
  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

// Replicated runs over the zeta x lambda grid (zeta-major). Replication r uses
// the same derived seed in every cell. Each cell's duration is the base
// duration rounded to a multiple of its zeta.
std::vector<SweepCell> sweep(const SimConfig& base, std::span<const double> zetas,
                             std::span<const double> lambdas, std::uint64_t replications);

struct ThresholdPoint {
  double zeta = 0.0;
  double lambda = 0.0;
  double mean_loss = 0.0;
};

struct ThresholdScan {
  std::vector<ThresholdPoint> curve;
  std::optional<double> knee;  // smallest zeta whose mean loss is below the floor
};

// Loss versus zeta with lambda = coupling * zeta.
ThresholdScan threshold_scan(const SimConfig& base, std::span<const double> zetas, double coupling = 0.2,
                             double floor = 0.01, std::uint64_t replications = 1);

struct CollisionTrace {
  std::uint64_t timestamps = 0;
  std::uint64_t collisions = 0;
  double frequency() const { return timestamps ? static_cast<double>(collisions) / static_cast<double>(timestamps) : 0.0; }
};

// Checks, at each of `timestamps` consecutive counter values, whether any two of
// the iot_count hopping nodes share an address or one lands on a static address.
CollisionTrace collision_trace(const SimConfig& config, std::uint64_t timestamps);

}  // namespace addrhop
