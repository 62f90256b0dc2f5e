#include "marge/scan_log.h"

#include <limits>

#include "marge/error.h"

namespace marge {

nlohmann::ordered_json to_json(const ScanEvent& event) {
  nlohmann::ordered_json j;
  j["t_ms"] = event.t_ms;
  j["uuid"] = beacon::uuid_to_hex(event.beacon.uuid);
  j["major"] = event.beacon.major;
  j["minor"] = event.beacon.minor;
  j["rssi"] = event.rssi;
  return j;
}

namespace {

std::int64_t int_field(const nlohmann::json& j, const char* key,
                       std::int64_t lo, std::int64_t hi) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::InvalidEvent,
                std::string("scan event field '") + key +
                    "' missing or not an integer");
  }
  const auto v = it->get<std::int64_t>();
  if (v < lo || v > hi) {
    throw Error(ErrorCode::InvalidEvent,
                std::string("scan event field '") + key + "' out of range");
  }
  return v;
}

}  // namespace

ScanEvent scan_event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::InvalidEvent, "scan event must be a JSON object");
  }
  const auto uuid = j.find("uuid");
  if (uuid == j.end() || !uuid->is_string()) {
    throw Error(ErrorCode::InvalidEvent, "scan event field 'uuid' missing");
  }
  ScanEvent event;
  event.beacon.uuid = beacon::uuid_from_hex(uuid->get<std::string>());
  event.beacon.major = static_cast<std::uint16_t>(int_field(j, "major", 0, 0xFFFF));
  event.beacon.minor = static_cast<std::uint16_t>(int_field(j, "minor", 0, 0xFFFF));
  event.rssi = static_cast<int>(int_field(j, "rssi", -127, 0));
  event.t_ms = int_field(j, "t_ms", 0, std::numeric_limits<std::int64_t>::max());
  return event;
}

ScanLog read_scan_log(std::istream& in) {
  ScanLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidEvent,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    ScanEvent event = scan_event_from_json(j);
    if (!log.empty() && event.t_ms < log.back().t_ms) {
      throw Error(ErrorCode::OutOfOrderEvent,
                  "line " + std::to_string(line_no) + ": t_ms regresses");
    }
    log.push_back(event);
  }
  return log;
}

void write_scan_log(std::ostream& out, const ScanLog& log) {
  for (const auto& event : log) out << to_json(event).dump() << '\n';
}

}  // namespace marge
