#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace marge::beacon {

using Uuid = std::array<std::uint8_t, 16>;

// Lowercase, 32 hex digits, no dashes.
std::string uuid_to_hex(const Uuid& uuid);
// Accepts 32 hex digits with optional dashes in any position. Throws
// Error{InvalidEvent} on anything else.
Uuid uuid_from_hex(std::string_view text);

struct BeaconId {
  Uuid uuid{};
  std::uint16_t major = 0;
  std::uint16_t minor = 0;

  auto operator<=>(const BeaconId&) const = default;
  bool operator==(const BeaconId&) const = default;
};

std::string to_string(const BeaconId& id);

enum class BeaconKind { proximity, sticker };

std::string_view kind_name(BeaconKind kind) noexcept;
BeaconKind kind_from_name(std::string_view name);

inline constexpr int kMinMeasuredPower = -127;
inline constexpr int kMaxMeasuredPower = 0;

struct BeaconFrame {
  BeaconId id;
  std::int8_t measured_power = -59;
  BeaconKind kind = BeaconKind::proximity;

  bool operator==(const BeaconFrame&) const = default;
};

// Kind is not on the wire; deployments map identities to hardware class.
using KindMap = std::map<BeaconId, BeaconKind>;

BeaconKind resolve_kind(const KindMap& kinds, const BeaconId& id) noexcept;

// Manufacturer-specific advertisement payload:
//   [0..2)   4C 00   manufacturer id (little-endian 0x004C)
//   [2]      02      beacon type
//   [3]      15      remaining length (21)
//   [4..20)  uuid
//   [20..22) major, big-endian
//   [22..24) minor, big-endian
//   [24]     measured power, two's complement
inline constexpr std::size_t kFrameSize = 25;
inline constexpr std::uint8_t kManufacturerLo = 0x4C;
inline constexpr std::uint8_t kManufacturerHi = 0x00;
inline constexpr std::uint8_t kBeaconType = 0x02;
inline constexpr std::uint8_t kBeaconLength = 0x15;

using FramePayload = std::array<std::uint8_t, kFrameSize>;

// Throws Error{InvalidEvent} if measured_power is outside [-127, 0].
FramePayload encode_advertisement(const BeaconFrame& frame);

// Throws Error{MalformedFrame} for any byte sequence that is not a beacon
// advertisement. Never reads outside `bytes`.
BeaconFrame parse_advertisement(std::span<const std::uint8_t> bytes,
                                const KindMap& kinds = {});

// Log-distance path loss: 10^((measured_power - rssi) / (10 n)).
// Throws Error{InvalidExponent} if path_loss_exponent <= 0.
double estimate_distance(double rssi_dbm, double measured_power_dbm,
                         double path_loss_exponent = 2.0);

enum class Zone { immediate = 0, near = 1, far = 2, out_of_range = 3 };

std::string_view zone_name(Zone zone) noexcept;

struct ZoneThresholds {
  double immediate_m = 1.0;
  double near_m = 7.0;
  double far_m = 30.0;
};

struct ProximityZone {
  Zone zone = Zone::out_of_range;
  double distance_m = 0.0;
};

ProximityZone classify_proximity(double distance_m,
                                 const ZoneThresholds& thresholds = {});

}  // namespace marge::beacon
