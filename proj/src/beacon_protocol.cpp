#include "marge/beacon_protocol.h"

#include <cmath>
#include <string>

#include "marge/error.h"

namespace marge::beacon {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void put_u16_be(std::uint8_t* out, std::uint16_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 8);
  out[1] = static_cast<std::uint8_t>(v & 0xFF);
}

std::uint16_t get_u16_be(const std::uint8_t* in) {
  return static_cast<std::uint16_t>((in[0] << 8) | in[1]);
}

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedFrame, "not a beacon advertisement: " + why);
}

}  // namespace

std::string uuid_to_hex(const Uuid& uuid) {
  std::string out;
  out.reserve(32);
  for (std::uint8_t b : uuid) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0F]);
  }
  return out;
}

Uuid uuid_from_hex(std::string_view text) {
  Uuid uuid{};
  std::size_t nibble = 0;
  for (char c : text) {
    if (c == '-') continue;
    const int v = hex_value(c);
    if (v < 0 || nibble >= 32) {
      throw Error(ErrorCode::InvalidEvent,
                  "uuid must be 32 hex digits: '" + std::string(text) + "'");
    }
    auto& byte = uuid[nibble / 2];
    byte = static_cast<std::uint8_t>(nibble % 2 == 0 ? v << 4 : byte | v);
    ++nibble;
  }
  if (nibble != 32) {
    throw Error(ErrorCode::InvalidEvent,
                "uuid must be 32 hex digits: '" + std::string(text) + "'");
  }
  return uuid;
}

std::string to_string(const BeaconId& id) {
  return uuid_to_hex(id.uuid) + "/" + std::to_string(id.major) + "/" +
         std::to_string(id.minor);
}

std::string_view kind_name(BeaconKind kind) noexcept {
  return kind == BeaconKind::sticker ? "sticker" : "proximity";
}

BeaconKind kind_from_name(std::string_view name) {
  if (name == "proximity") return BeaconKind::proximity;
  if (name == "sticker") return BeaconKind::sticker;
  throw Error(ErrorCode::InvalidConfig,
              "unknown beacon kind '" + std::string(name) + "'");
}

BeaconKind resolve_kind(const KindMap& kinds, const BeaconId& id) noexcept {
  const auto it = kinds.find(id);
  return it == kinds.end() ? BeaconKind::proximity : it->second;
}

FramePayload encode_advertisement(const BeaconFrame& frame) {
  if (frame.measured_power < kMinMeasuredPower ||
      frame.measured_power > kMaxMeasuredPower) {
    throw Error(ErrorCode::InvalidEvent, "measured power out of [-127, 0]");
  }
  FramePayload out{};
  out[0] = kManufacturerLo;
  out[1] = kManufacturerHi;
  out[2] = kBeaconType;
  out[3] = kBeaconLength;
  for (std::size_t i = 0; i < frame.id.uuid.size(); ++i) {
    out[4 + i] = frame.id.uuid[i];
  }
  put_u16_be(&out[20], frame.id.major);
  put_u16_be(&out[22], frame.id.minor);
  out[24] = static_cast<std::uint8_t>(frame.measured_power);
  return out;
}

BeaconFrame parse_advertisement(std::span<const std::uint8_t> bytes,
                                const KindMap& kinds) {
  if (bytes.size() != kFrameSize) {
    malformed("length " + std::to_string(bytes.size()) + ", expected 25");
  }
  if (bytes[0] != kManufacturerLo || bytes[1] != kManufacturerHi) {
    malformed("manufacturer prefix");
  }
  if (bytes[2] != kBeaconType) malformed("beacon type marker");
  if (bytes[3] != kBeaconLength) malformed("length marker");

  const auto power = static_cast<std::int8_t>(bytes[24]);
  if (power < kMinMeasuredPower || power > kMaxMeasuredPower) {
    malformed("measured power " + std::to_string(power));
  }

  BeaconFrame frame;
  for (std::size_t i = 0; i < frame.id.uuid.size(); ++i) {
    frame.id.uuid[i] = bytes[4 + i];
  }
  frame.id.major = get_u16_be(&bytes[20]);
  frame.id.minor = get_u16_be(&bytes[22]);
  frame.measured_power = power;
  frame.kind = resolve_kind(kinds, frame.id);
  return frame;
}

double estimate_distance(double rssi_dbm, double measured_power_dbm,
                         double path_loss_exponent) {
  if (!(path_loss_exponent > 0.0)) {
    throw Error(ErrorCode::InvalidExponent,
                "path loss exponent must be positive");
  }
  return std::pow(10.0, (measured_power_dbm - rssi_dbm) /
                            (10.0 * path_loss_exponent));
}

std::string_view zone_name(Zone zone) noexcept {
  switch (zone) {
    case Zone::immediate: return "immediate";
    case Zone::near: return "near";
    case Zone::far: return "far";
    case Zone::out_of_range: return "out_of_range";
  }
  return "out_of_range";
}

ProximityZone classify_proximity(double distance_m,
                                 const ZoneThresholds& thresholds) {
  ProximityZone result{Zone::out_of_range, distance_m};
  if (distance_m <= thresholds.immediate_m) {
    result.zone = Zone::immediate;
  } else if (distance_m <= thresholds.near_m) {
    result.zone = Zone::near;
  } else if (distance_m <= thresholds.far_m) {
    result.zone = Zone::far;
  }
  return result;
}

}  // namespace marge::beacon
