#include "addrhop/tracking.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "addrhop/kv.hpp"

namespace addrhop {

Address Address::v4(std::array<std::uint8_t, 4> bytes) {
  Address a;
  a.family_ = Family::v4;
  std::copy(bytes.begin(), bytes.end(), a.bytes_.begin());
  return a;
}

Address Address::v6(std::array<std::uint8_t, 16> bytes) {
  Address a;
  a.family_ = Family::v6;
  a.bytes_ = bytes;
  return a;
}

Address Address::parse(std::string_view text) {
  const std::string s(text);
  std::array<std::uint8_t, 16> buf{};
  if (s.find(':') == std::string::npos) {
    if (inet_pton(AF_INET, s.c_str(), buf.data()) == 1) return v4({buf[0], buf[1], buf[2], buf[3]});
  } else if (inet_pton(AF_INET6, s.c_str(), buf.data()) == 1) {
    return v6(buf);
  }
  throw std::invalid_argument("invalid address '" + s + "'");
}

std::uint64_t Address::low_bits(unsigned bits) const {
  if (bits > 64 || bits > width_bits()) throw std::invalid_argument("Address::low_bits: too many bits");
  std::uint64_t v = 0;
  const unsigned n = width_bytes();
  for (unsigned i = n >= 8 ? n - 8 : 0; i < n; ++i) v = (v << 8) | bytes_[i];
  return bits == 64 ? v : v & ((std::uint64_t{1} << bits) - 1);
}

Address Address::with_low_bits(unsigned bits, std::uint64_t value) const {
  if (bits > 64 || bits > width_bits()) throw std::invalid_argument("Address::with_low_bits: too many bits");
  Address out = *this;
  const unsigned n = width_bytes();
  for (unsigned b = 0; b < bits; ++b) {
    const unsigned byte_index = n - 1 - b / 8;
    const auto mask = static_cast<std::uint8_t>(1U << (b % 8));
    if ((value >> b) & 1) out.bytes_[byte_index] |= mask;
    else out.bytes_[byte_index] &= static_cast<std::uint8_t>(~mask);
  }
  return out;
}

std::string Address::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  const int af = family_ == Family::v4 ? AF_INET : AF_INET6;
  if (inet_ntop(af, bytes_.data(), buf, sizeof buf) == nullptr) throw std::runtime_error("inet_ntop failed");
  return buf;
}

SubnetSpec SubnetSpec::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw std::invalid_argument("subnet needs a /prefix: '" + std::string(text) + "'");
  SubnetSpec s;
  s.base = Address::parse(text.substr(0, slash));
  const auto prefix = text.substr(slash + 1);
  unsigned len = 0;
  const auto [ptr, ec] = std::from_chars(prefix.data(), prefix.data() + prefix.size(), len);
  if (ec != std::errc{} || ptr != prefix.data() + prefix.size() || prefix.empty())
    throw std::invalid_argument("invalid prefix length in '" + std::string(text) + "'");
  s.prefix_len = len;
  s.validate();
  return s;
}

std::string SubnetSpec::to_string() const { return base.to_string() + "/" + std::to_string(prefix_len); }

unsigned derive_width(const SubnetSpec& subnet) {
  const unsigned width = subnet.base.width_bits();
  if (subnet.prefix_len > width) throw std::invalid_argument("prefix length exceeds address width");
  return width - subnet.prefix_len;
}

void SubnetSpec::validate() const {
  const unsigned x = derive_width(*this);
  if (x > 64) throw std::invalid_argument("subnet has more than 64 host bits");
  if (base.low_bits(x) != 0) throw std::invalid_argument("subnet base has nonzero host bits: " + to_string());
}

bool SubnetSpec::contains(const Address& a) const {
  if (a.family() != base.family()) return false;
  const unsigned x = derive_width(*this);
  return a.with_low_bits(x, 0) == base;
}

Address assemble(const SubnetSpec& subnet, std::uint64_t host_id) {
  const unsigned x = derive_width(subnet);
  if (x < 64 && host_id >> x != 0) throw std::invalid_argument("host id does not fit in the subnet's host bits");
  return subnet.base.with_low_bits(x, host_id);
}

void TFParams::validate() const {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("TFParams: zeta must be positive");
  if (!std::isfinite(epoch)) throw std::invalid_argument("TFParams: epoch must be finite");
  hash.validate();
  subnet.validate();
  if (derive_width(subnet) > 2 * hash.l) throw std::invalid_argument("TFParams: host bits exceed digest width 2l");
}

double hop_instant(const TFParams& params, Timestamp k) { return params.epoch + static_cast<double>(k) * params.zeta; }

Timestamp timestamp_at(double local_time, const TFParams& params) {
  if (!(local_time >= params.epoch)) throw std::invalid_argument("timestamp_at: local time precedes the epoch");
  const double q = std::floor((local_time - params.epoch) / params.zeta);
  if (q >= 18446744073709551615.0) throw std::overflow_error("timestamp_at: counter overflow");
  auto k = static_cast<Timestamp>(q);
  // Resolve rounding so that k matches the hop instants as computed by hop_instant.
  while (hop_instant(params, k + 1) <= local_time) ++k;
  while (k > 0 && hop_instant(params, k) > local_time) --k;
  return k;
}

Address address_at(const TFParams& params, Timestamp ts) {
  const unsigned x = derive_width(params.subnet);
  if (x > 2 * params.hash.l) throw std::invalid_argument("address_at: host bits exceed digest width 2l");
  if (x == 0) return params.subnet.base;
  const auto host = static_cast<std::uint64_t>(h_x(digest_timestamp(ts, params.hash), x));
  return assemble(params.subnet, host);
}

void HopSchedule::validate() const {
  params.validate();
  if (!(lambda >= 0.0) || !(lambda < params.zeta))
    throw std::invalid_argument("HopSchedule: lambda must satisfy 0 <= lambda < zeta");
}

ActiveGenerations active_generations(const HopSchedule& sched, double local_time) {
  const Timestamp k = timestamp_at(local_time, sched.params);
  if (k < 1) throw std::invalid_argument("active_generations: local time precedes the second hop");
  ActiveGenerations g{k, std::nullopt};
  if (local_time - hop_instant(sched.params, k) < sched.lambda) g.previous = k - 1;
  return g;
}

bool in_overlap(const HopSchedule& sched, double local_time) {
  return active_generations(sched, local_time).previous.has_value();
}

std::vector<Address> active_addresses(const HopSchedule& sched, double local_time) {
  const ActiveGenerations g = active_generations(sched, local_time);
  std::vector<Address> out{address_at(sched.params, g.current)};
  if (g.previous) {
    Address prev = address_at(sched.params, *g.previous);
    if (prev != out.front()) out.push_back(prev);
  }
  return out;
}

bool accepts(const HopSchedule& sched, double local_time, const Address& dst) {
  for (const Address& a : active_addresses(sched, local_time))
    if (a == dst) return true;
  return false;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::string to_kv(const TFParams& params) {
  std::ostringstream out;
  out << "epoch=" << format_double(params.epoch) << '\n'
      << "zeta=" << format_double(params.zeta) << '\n'
      << "l=" << params.hash.l << '\n'
      << "n=" << params.hash.n << '\n'
      << "s0_hex=" << hex64(params.hash.s0.raw()) << '\n'
      << "t0_hex=" << hex64(params.hash.t0.raw()) << '\n'
      << "subnet=" << params.subnet.to_string() << '\n';
  return out.str();
}

std::string to_kv(const HopSchedule& sched) {
  return to_kv(sched.params) + "lambda=" + format_double(sched.lambda) + '\n';
}

namespace {

TFParams tfparams_from(const KeyValues& kv) {
  TFParams p;
  p.epoch = parse_double(require(kv, "epoch"));
  p.zeta = parse_double(require(kv, "zeta"));
  p.hash.l = static_cast<unsigned>(parse_u64(require(kv, "l")));
  p.hash.n = static_cast<unsigned>(parse_u64(require(kv, "n")));
  p.hash.s0 = Fraction::from_raw(parse_hex64(require(kv, "s0_hex")));
  p.hash.t0 = Fraction::from_raw(parse_hex64(require(kv, "t0_hex")));
  p.subnet = SubnetSpec::parse(require(kv, "subnet"));
  p.validate();
  return p;
}

}  // namespace

TFParams tfparams_from_kv(std::string_view text) { return tfparams_from(parse_kv(text)); }

HopSchedule schedule_from_kv(std::string_view text) {
  const KeyValues kv = parse_kv(text);
  HopSchedule s{tfparams_from(kv), parse_double(require(kv, "lambda"))};
  s.validate();
  return s;
}

}  // namespace addrhop
