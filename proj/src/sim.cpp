#include "addrhop/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace addrhop {
namespace {

// Stream ids for derive_seed.
enum Stream : std::uint64_t {
  kStreamTraffic = 1,
  kStreamDelay = 2,
  kStreamSync = 3,
  kStreamGuess = 4,
  kStreamNode = 5,
  kStreamStatic = 6,
  kStreamReplication = 7,
};

bool is_multiple(double total, double step) {
  const double ratio = total / step;
  const double nearest = std::round(ratio);
  return nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio);
}

std::uint64_t period_count(const SimConfig& c) { return static_cast<std::uint64_t>(std::llround(c.duration / c.zeta)); }

std::uint64_t uniform_host(Rng& rng, unsigned x) {
  if (x == 0) return 0;
  if (x == 64) return rng.next();
  return rng.below(std::uint64_t{1} << x);
}

// Distinct host ids taken by statically addressed nodes.
std::vector<std::uint64_t> static_hosts(const SimConfig& config) {
  const unsigned x = derive_width(config.subnet);
  Rng rng(derive_seed(config.seed, 0, kStreamStatic));
  std::vector<std::uint64_t> hosts;
  std::unordered_set<std::uint64_t> taken;
  while (hosts.size() < config.static_count) {
    const std::uint64_t h = uniform_host(rng, x);
    if (taken.insert(h).second) hosts.push_back(h);
  }
  return hosts;
}

struct NodeKey {
  HashParams hash;
  std::uint64_t counter_offset;
};

NodeKey node_key(const SimConfig& config, std::uint64_t node) {
  NodeKey key{config.hash, kEpochHops};
  if (node == 0) return key;
  Rng rng(derive_seed(config.seed, node, kStreamNode));
  auto seed_fraction = [&rng] {
    std::uint64_t raw = rng.next() | 1;
    if (raw == ~std::uint64_t{0}) raw ^= 2;
    return Fraction::from_raw(raw);
  };
  key.hash.s0 = seed_fraction();
  key.hash.t0 = seed_fraction();
  key.counter_offset = kEpochHops + rng.below(std::uint64_t{1} << 32);
  return key;
}

// True when two nodes share an address or a node sits on a static address at
// counter step j (node i reads counter offset_i + j).
bool collides_at(std::span<const NodeKey> nodes, const std::unordered_set<std::uint64_t>& statics, unsigned x,
                 std::uint64_t j, std::vector<std::uint64_t>& scratch) {
  scratch.clear();
  for (const NodeKey& n : nodes) {
    const auto host = static_cast<std::uint64_t>(h_x(digest_timestamp(n.counter_offset + j, n.hash), x));
    if (statics.contains(host) || std::find(scratch.begin(), scratch.end(), host) != scratch.end()) return true;
    scratch.push_back(host);
  }
  return false;
}

class AddressCache {
 public:
  explicit AddressCache(const TFParams& params) : params_(params) {}
  const Address& at(Timestamp ts) {
    auto it = cache_.find(ts);
    if (it == cache_.end()) it = cache_.emplace(ts, address_at(params_, ts)).first;
    return it->second;
  }

 private:
  const TFParams& params_;
  std::unordered_map<Timestamp, Address> cache_;
};

enum class EventKind : int { sync = 0, hop = 1, expire = 2, arrive = 3, emit = 4 };

struct Event {
  double time;
  EventKind kind;
  std::uint64_t seq;
  // hop/expire: generation; arrive: packet index
  std::uint64_t arg = 0;
  std::uint64_t version = 0;

  // Min-heap order: time, then kind (hops before arrivals), then insertion.
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct Packet {
  Address dst;
  std::uint64_t period;
};

}  // namespace

// DelayModel ------------------------------------------------------------------

DelayModel DelayModel::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("delay model needs kind:values, got '" + std::string(text) + "'");
  const auto kind = text.substr(0, colon);
  const auto values = parse_double_list(text.substr(colon + 1));
  DelayModel m;
  if (kind == "deterministic" && values.size() == 1) m = deterministic(values[0]);
  else if (kind == "shifted_exp" && values.size() == 2) m = shifted_exponential(values[0], values[1]);
  else if (kind == "empirical") m = empirical(values);
  else throw std::invalid_argument("unknown delay model '" + std::string(text) + "'");
  m.validate();
  return m;
}

std::string DelayModel::to_string() const {
  struct Visitor {
    std::string operator()(const Deterministic& k) const { return "deterministic:" + format_double(k.d); }
    std::string operator()(const ShiftedExponential& k) const {
      return "shifted_exp:" + format_double(k.d_min) + "," + format_double(k.mean_extra);
    }
    std::string operator()(const Empirical& k) const {
      std::string out = "empirical:";
      for (std::size_t i = 0; i < k.samples.size(); ++i) out += (i ? "," : "") + format_double(k.samples[i]);
      return out;
    }
  };
  return std::visit(Visitor{}, kind);
}

void DelayModel::validate() const {
  struct Visitor {
    static bool ok(double v) { return v >= 0.0 && std::isfinite(v); }
    bool operator()(const Deterministic& k) const { return ok(k.d); }
    bool operator()(const ShiftedExponential& k) const { return ok(k.d_min) && ok(k.mean_extra); }
    bool operator()(const Empirical& k) const {
      return !k.samples.empty() && std::all_of(k.samples.begin(), k.samples.end(), [](double v) { return ok(v); });
    }
  };
  if (!std::visit(Visitor{}, kind)) throw std::invalid_argument("DelayModel: delays must be finite, non-negative, and non-empty");
}

double DelayModel::sample(Rng& rng) const {
  struct Visitor {
    Rng& rng;
    double operator()(const Deterministic& k) const { return k.d; }
    double operator()(const ShiftedExponential& k) const { return k.d_min + (k.mean_extra > 0 ? rng.exponential(k.mean_extra) : 0.0); }
    double operator()(const Empirical& k) const { return k.samples[rng.below(k.samples.size())]; }
  };
  return std::visit(Visitor{rng}, kind);
}

double DelayModel::mean() const {
  struct Visitor {
    double operator()(const Deterministic& k) const { return k.d; }
    double operator()(const ShiftedExponential& k) const { return k.d_min + k.mean_extra; }
    double operator()(const Empirical& k) const {
      double s = 0.0;
      for (double v : k.samples) s += v;
      return s / static_cast<double>(k.samples.size());
    }
  };
  return std::visit(Visitor{}, kind);
}

// SimConfig -------------------------------------------------------------------

void SimConfig::validate() const {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("SimConfig: zeta must be positive");
  if (!(lambda >= 0.0) || !(lambda < zeta)) throw std::invalid_argument("SimConfig: need 0 <= lambda < zeta");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("SimConfig: gamma must be non-negative");
  if (!(duration > 0.0) || !is_multiple(duration, zeta))
    throw std::invalid_argument("SimConfig: duration must be a positive multiple of zeta");
  delay.validate();
  if (!(delta >= 0.0) || !(delta < 1.0)) throw std::invalid_argument("SimConfig: need 0 <= delta < 1");
  if (delta > 0.0) {
    if (eta < 1) throw std::invalid_argument("SimConfig: eta must be at least 1");
    if (eta > max_eta(delta)) throw std::invalid_argument("SimConfig: eta violates eta < 1/(2 delta)");
  }
  if (iot_count < 1) throw std::invalid_argument("SimConfig: need at least one IoT node");
  if (!(processing_delay >= 0.0) || !std::isfinite(processing_delay))
    throw std::invalid_argument("SimConfig: processing_delay must be non-negative");
  const TFParams p = node_params(*this, 0);
  p.validate();
  const unsigned x = p.host_bits();
  if (x < 64 && static_count + iot_count > (std::uint64_t{1} << x))
    throw std::invalid_argument("SimConfig: more nodes than addresses in the subnet");
}

void SimConfig::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "zeta") zeta = parse_double(value);
    else if (key == "lambda") lambda = parse_double(value);
    else if (key == "gamma") gamma = parse_double(value);
    else if (key == "duration") duration = parse_double(value);
    else if (key == "delay") delay = DelayModel::parse(value);
    else if (key == "delta") delta = parse_double(value);
    else if (key == "eta") eta = static_cast<std::int64_t>(parse_u64(value));
    else if (key == "iot_count") iot_count = parse_u64(value);
    else if (key == "static_count") static_count = parse_u64(value);
    else if (key == "subnet") subnet = SubnetSpec::parse(value);
    else if (key == "l") hash.l = static_cast<unsigned>(parse_u64(value));
    else if (key == "n") hash.n = static_cast<unsigned>(parse_u64(value));
    else if (key == "s0_hex") hash.s0 = Fraction::from_raw(parse_hex64(value));
    else if (key == "t0_hex") hash.t0 = Fraction::from_raw(parse_hex64(value));
    else if (key == "processing_delay") processing_delay = parse_double(value);
    else if (key == "cn_authorized") {
      if (value == "true" || value == "1") cn_authorized = true;
      else if (value == "false" || value == "0") cn_authorized = false;
      else throw std::invalid_argument("cn_authorized must be true or false");
    } else if (key == "seed") seed = parse_u64(value);
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

KeyValues SimConfig::to_kv() const {
  return {
      {"zeta", format_double(zeta)},
      {"lambda", format_double(lambda)},
      {"gamma", format_double(gamma)},
      {"duration", format_double(duration)},
      {"delay", delay.to_string()},
      {"delta", format_double(delta)},
      {"eta", std::to_string(eta)},
      {"iot_count", std::to_string(iot_count)},
      {"static_count", std::to_string(static_count)},
      {"subnet", subnet.to_string()},
      {"l", std::to_string(hash.l)},
      {"n", std::to_string(hash.n)},
      {"s0_hex", hex64(hash.s0.raw())},
      {"t0_hex", hex64(hash.t0.raw())},
      {"processing_delay", format_double(processing_delay)},
      {"cn_authorized", cn_authorized ? "true" : "false"},
      {"seed", std::to_string(seed)},
  };
}

double Metrics::loss_fraction() const {
  return sent ? static_cast<double>(lost_stale_address) / static_cast<double>(sent) : 0.0;
}

TFParams node_params(const SimConfig& config, std::uint64_t node) {
  const NodeKey key = node_key(config, node);
  TFParams p;
  p.zeta = config.zeta;
  p.epoch = -static_cast<double>(key.counter_offset) * config.zeta;
  p.hash = key.hash;
  p.subnet = config.subnet;
  return p;
}

// Handshake -------------------------------------------------------------------

namespace {
const HashParams kProofHash{32, 75, kDefaultS0, kDefaultT0};
}

Digest handshake_proof(std::string_view psk, std::uint64_t nonce) {
  std::vector<std::uint8_t> msg(psk.begin(), psk.end());
  const auto n = encode_timestamp(nonce);
  msg.insert(msg.end(), n.begin(), n.end());
  return digest(msg, kProofHash);
}

HandshakeResponse answer(const Challenge& challenge, std::string_view psk) {
  return {challenge.nonce, handshake_proof(psk, challenge.nonce)};
}

CentralNode::CentralNode(std::string psk, ParamBundle bundle, std::uint64_t seed, DriftClock clock)
    : psk_(std::move(psk)), wire_bundle_(bundle.serialize()), rng_(seed), clock_(clock) {
  if (psk_.empty()) throw std::invalid_argument("CentralNode: empty pre-shared secret");
  bundle.schedule.validate();
}

Challenge CentralNode::challenge() {
  std::uint64_t nonce = rng_.next();
  while (!issued_.insert(nonce).second) nonce = rng_.next();
  outstanding_.insert(nonce);
  return {nonce};
}

HandshakeResult CentralNode::handshake(const HandshakeResponse& response, const DriftClock& cn_clock,
                                       ExchangeDelays delays, double now) {
  HandshakeResult result;
  result.cn_clock = cn_clock;
  if (outstanding_.erase(response.nonce) == 0) {
    result.reason = "unknown or already used nonce";
    return result;
  }
  if (!(response.proof == handshake_proof(psk_, response.nonce))) {
    result.reason = "bad response";
    return result;
  }
  result.cn_clock = coarse_sync(clock_, cn_clock, delays, now).corrected;
  result.bundle = ParamBundle::parse(wire_bundle_);
  result.reason = "ok";
  return result;
}

// Simulation ------------------------------------------------------------------

Metrics run(const SimConfig& config, std::ostream* trace) {
  config.validate();

  const TFParams iot_params = node_params(config, 0);
  const HopSchedule sched{iot_params, config.lambda};
  const unsigned x = iot_params.host_bits();
  const std::uint64_t periods = period_count(config);

  Metrics m;
  m.per_period.resize(periods);

  AddressCache book(iot_params);
  const bool drifting = config.delta > 0.0;
  // Worst case: the IoT clock runs fast and the CN clock slow.
  DriftClock iot_clock{drifting ? config.delta : 0.0, 0.0};
  DriftClock cn_clock{drifting ? -config.delta : 0.0, 0.0};
  const DriftClock reference{};
  const double tau = drifting ? config.zeta * static_cast<double>(config.eta) : 0.0;

  Rng traffic(derive_seed(config.seed, 0, kStreamTraffic));
  Rng delay_rng(derive_seed(config.seed, 0, kStreamDelay));
  Rng sync_rng(derive_seed(config.seed, 0, kStreamSync));
  Rng guess_rng(derive_seed(config.seed, 0, kStreamGuess));

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  auto push = [&](double time, EventKind kind, std::uint64_t arg = 0, std::uint64_t version = 0) {
    queue.push(Event{time, kind, seq++, arg, version});
  };
  auto emit_trace = [&](double t, const char* event, const char* node, const std::string& addr) {
    if (trace) *trace << format_double(t) << ',' << event << ',' << node << ',' << addr << '\n';
  };

  std::uint64_t hop_version = 0;
  auto schedule_hop = [&](Timestamp gen) {
    const double local = hop_instant(iot_params, gen) + config.processing_delay;
    push(iot_clock.true_time_of(local), EventKind::hop, gen, hop_version);
  };
  auto next_generation = [&](double t) {
    return timestamp_at(iot_clock.read(t) - config.processing_delay, iot_params) + 1;
  };

  if (trace) *trace << "time,event,node,address\n";
  if (drifting) push(0.0, EventKind::sync);
  schedule_hop(next_generation(0.0));
  if (config.gamma > 0.0) {
    const double first = traffic.exponential(1.0 / config.gamma);
    if (first < config.duration) push(first, EventKind::emit);
  }

  std::vector<Packet> packets;
  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    const double t = ev.time;
    switch (ev.kind) {
      case EventKind::sync: {
        const ExchangeDelays cn_leg{config.delay.sample(sync_rng), config.delay.sample(sync_rng)};
        const ExchangeDelays iot_leg{config.delay.sample(sync_rng), config.delay.sample(sync_rng)};
        cn_clock = coarse_sync(reference, cn_clock, cn_leg, t).corrected;
        iot_clock = coarse_sync(reference, iot_clock, iot_leg, t).corrected;
        emit_trace(t, "sync", "cn", "-");
        emit_trace(t, "sync", "iot", "-");
        ++hop_version;
        schedule_hop(next_generation(t));
        if (t + tau < config.duration) push(t + tau, EventKind::sync);
        break;
      }
      case EventKind::hop: {
        if (ev.version != hop_version) break;
        emit_trace(t, "hop", "iot", book.at(ev.arg).to_string());
        if (trace && config.lambda > 0.0) {
          const double local = hop_instant(iot_params, ev.arg) + config.processing_delay + config.lambda;
          push(iot_clock.true_time_of(local), EventKind::expire, ev.arg - 1);
        }
        if (t < config.duration) schedule_hop(ev.arg + 1);
        break;
      }
      case EventKind::expire:
        emit_trace(t, "expire", "iot", book.at(ev.arg).to_string());
        break;
      case EventKind::emit: {
        const Timestamp ts = timestamp_at(cn_clock.read(t), iot_params);
        const Address dst = config.cn_authorized ? book.at(ts) : assemble(config.subnet, uniform_host(guess_rng, x));
        const auto period = std::min<std::uint64_t>(static_cast<std::uint64_t>(t / config.zeta), periods - 1);
        ++m.sent;
        ++m.per_period[period].sent;
        packets.push_back({dst, period});
        push(t + config.delay.sample(delay_rng), EventKind::arrive, packets.size() - 1);
        emit_trace(t, "send", "cn", dst.to_string());
        const double next = t + traffic.exponential(1.0 / config.gamma);
        if (next < config.duration) push(next, EventKind::emit);
        break;
      }
      case EventKind::arrive: {
        const Packet& pkt = packets[ev.arg];
        const ActiveGenerations g = active_generations(sched, iot_clock.read(t) - config.processing_delay);
        const bool ok = book.at(g.current) == pkt.dst || (g.previous && book.at(*g.previous) == pkt.dst);
        if (ok) {
          ++m.delivered;
        } else {
          ++m.lost_stale_address;
          ++m.per_period[pkt.period].lost;
        }
        emit_trace(t, ok ? "deliver" : "drop", "iot", pkt.dst.to_string());
        break;
      }
    }
  }

  if (config.iot_count >= 2 || config.static_count >= 1) {
    std::vector<NodeKey> nodes;
    for (std::uint64_t i = 0; i < config.iot_count; ++i) nodes.push_back(node_key(config, i));
    const auto hosts = static_hosts(config);
    const std::unordered_set<std::uint64_t> statics(hosts.begin(), hosts.end());
    std::vector<std::uint64_t> scratch;
    for (std::uint64_t j = 0; j < periods; ++j)
      if (collides_at(nodes, statics, x, j, scratch)) ++m.collision_periods;
    m.checked_periods = periods;
  }
  return m;
}

std::vector<SweepCell> sweep(const SimConfig& base, std::span<const double> zetas, std::span<const double> lambdas,
                             std::uint64_t replications) {
  if (zetas.empty() || lambdas.empty()) throw std::invalid_argument("sweep: empty grid");
  if (replications < 2) throw std::invalid_argument("sweep: need at least two replications");

  std::vector<SimConfig> cells;
  for (double z : zetas) {
    for (double l : lambdas) {
      SimConfig c = base;
      c.zeta = z;
      c.lambda = l;
      c.duration = z * std::max(1.0, std::round(base.duration / z));
      c.validate();
      cells.push_back(c);
    }
  }

  std::vector<SweepCell> out(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      std::vector<double> losses;
      for (std::uint64_t r = 0; r < replications; ++r) {
        SimConfig c = cells[i];
        c.seed = derive_seed(base.seed, r, kStreamReplication);
        losses.push_back(run(c).loss_fraction());
      }
      out[i] = SweepCell{cells[i].zeta, cells[i].lambda, replications, summarize(losses)};
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(1U, std::thread::hardware_concurrency()), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

ThresholdScan threshold_scan(const SimConfig& base, std::span<const double> zetas, double coupling, double floor,
                             std::uint64_t replications) {
  if (zetas.empty()) throw std::invalid_argument("threshold_scan: empty zeta range");
  if (!(coupling >= 0.0) || !(coupling < 1.0)) throw std::invalid_argument("threshold_scan: coupling must be in [0, 1)");
  if (replications < 1) throw std::invalid_argument("threshold_scan: need at least one replication");
  ThresholdScan scan;
  for (double z : zetas) {
    SimConfig c = base;
    c.zeta = z;
    c.lambda = coupling * z;
    c.duration = z * std::max(1.0, std::round(base.duration / z));
    double total = 0.0;
    for (std::uint64_t r = 0; r < replications; ++r) {
      c.seed = derive_seed(base.seed, r, kStreamReplication);
      total += run(c).loss_fraction();
    }
    const double mean = total / static_cast<double>(replications);
    scan.curve.push_back({z, c.lambda, mean});
    if (mean < floor && (!scan.knee || z < *scan.knee)) scan.knee = z;
  }
  return scan;
}

CollisionTrace collision_trace(const SimConfig& config, std::uint64_t timestamps) {
  const unsigned x = derive_width(config.subnet);
  if (x == 0) throw std::invalid_argument("collision_trace: subnet has no host bits");
  if (config.iot_count < 1) throw std::invalid_argument("collision_trace: need at least one IoT node");
  if (x < 64 && config.static_count + config.iot_count > (std::uint64_t{1} << x))
    throw std::invalid_argument("collision_trace: more nodes than addresses");

  std::vector<NodeKey> nodes;
  for (std::uint64_t i = 0; i < config.iot_count; ++i) nodes.push_back(node_key(config, i));
  const auto hosts = static_hosts(config);
  const std::unordered_set<std::uint64_t> statics(hosts.begin(), hosts.end());

  CollisionTrace trace;
  trace.timestamps = timestamps;
  std::vector<std::uint64_t> scratch;
  for (std::uint64_t j = 0; j < timestamps; ++j)
    if (collides_at(nodes, statics, x, j, scratch)) ++trace.collisions;
  return trace;
}

}  // namespace addrhop
