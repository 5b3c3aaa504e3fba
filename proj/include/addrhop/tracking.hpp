#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "addrhop/chaos_hash.hpp"

namespace addrhop {

// IPv4 or IPv6 network address, stored big-endian.
class Address {
 public:
  enum class Family : std::uint8_t { v4, v6 };

  Address() = default;
  static Address v4(std::array<std::uint8_t, 4> bytes);
  static Address v6(std::array<std::uint8_t, 16> bytes);

  // Dotted-quad or colon-hex text; throws std::invalid_argument otherwise.
  static Address parse(std::string_view text);

  Family family() const { return family_; }
  unsigned width_bits() const { return family_ == Family::v4 ? 32 : 128; }
  unsigned width_bytes() const { return width_bits() / 8; }
  std::uint8_t byte(unsigned i) const { return bytes_[i]; }

  // Value of the low `bits` bits (bits <= 64).
  std::uint64_t low_bits(unsigned bits) const;
  Address with_low_bits(unsigned bits, std::uint64_t value) const;

  std::string to_string() const;

  friend auto operator<=>(const Address&, const Address&) = default;

 private:
  std::array<std::uint8_t, 16> bytes_{};
  Family family_ = Family::v4;
};

struct SubnetSpec {
  Address base;
  unsigned prefix_len = 0;

  // "129.110.242.0/24" or "2001:db8::/64". Validated.
  static SubnetSpec parse(std::string_view text);
  std::string to_string() const;

  // Host bits of base are zero and the host width is at most 64.
  void validate() const;
  bool contains(const Address& a) const;

  friend bool operator==(const SubnetSpec&, const SubnetSpec&) = default;
};

unsigned derive_width(const SubnetSpec& subnet);
Address assemble(const SubnetSpec& subnet, std::uint64_t host_id);

// Parameters shared between an IoT node and its authorized peers.
struct TFParams {
  double epoch = 0.0;  // seconds; local time at which the counter reads zero
  double zeta = 1.0;   // seconds per counter increment
  HashParams hash;
  SubnetSpec subnet;

  void validate() const;
  unsigned host_bits() const { return derive_width(subnet); }

  friend bool operator==(const TFParams&, const TFParams&) = default;
};

using Timestamp = std::uint64_t;

// floor((local_time - epoch) / zeta), consistent with the hop instants epoch + k * zeta.
Timestamp timestamp_at(double local_time, const TFParams& params);
double hop_instant(const TFParams& params, Timestamp k);

Address address_at(const TFParams& params, Timestamp ts);

struct HopSchedule {
  TFParams params;
  double lambda = 0.0;  // seconds the previous address stays accepted after a hop

  void validate() const;
  friend bool operator==(const HopSchedule&, const HopSchedule&) = default;
};

// Generations whose addresses are accepted at local_time: the current one and,
// inside a retention window, its predecessor. Requires local_time >= epoch + zeta.
struct ActiveGenerations {
  Timestamp current = 0;
  std::optional<Timestamp> previous;
};
ActiveGenerations active_generations(const HopSchedule& sched, double local_time);

// Current address first, then the retained previous one while inside
// [epoch + k*zeta, epoch + k*zeta + lambda). Duplicates are folded.
std::vector<Address> active_addresses(const HopSchedule& sched, double local_time);
bool accepts(const HopSchedule& sched, double local_time, const Address& dst);

// Whether local_time falls inside a retention window.
bool in_overlap(const HopSchedule& sched, double local_time);

// key=value text block: epoch, zeta, l, n, s0_hex, t0_hex, subnet and, for a
// schedule, lambda.
std::string to_kv(const TFParams& params);
std::string to_kv(const HopSchedule& sched);
TFParams tfparams_from_kv(std::string_view text);
HopSchedule schedule_from_kv(std::string_view text);

std::string format_double(double v);

}  // namespace addrhop
