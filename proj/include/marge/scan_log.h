#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marge/beacon_protocol.h"

namespace marge {

struct ScanEvent {
  beacon::BeaconId beacon;
  int rssi = 0;         // dBm, [-127, 0]
  std::int64_t t_ms = 0;  // since stream epoch

  bool operator==(const ScanEvent&) const = default;
};

using ScanLog = std::vector<ScanEvent>;

// Wire form: {"t_ms": int, "uuid": hex, "major": int, "minor": int,
// "rssi": int}, keys in that order.
nlohmann::ordered_json to_json(const ScanEvent& event);
// Throws Error{InvalidEvent} on missing or out-of-range fields.
ScanEvent scan_event_from_json(const nlohmann::json& j);

// One JSON object per line. Blank lines are skipped; lines must be
// t_ms-sorted (Error{OutOfOrderEvent} otherwise).
ScanLog read_scan_log(std::istream& in);
void write_scan_log(std::ostream& out, const ScanLog& log);

}  // namespace marge
