#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "marge/beacon_protocol.h"
#include "marge/scan_log.h"

namespace marge::proximity {

using beacon::BeaconId;

enum class Presence { present, absent };

struct RegionEvent {
  enum class Type { entered, exited };
  Type type;
  BeaconId beacon;
  std::int64_t t_ms;

  bool operator==(const RegionEvent&) const = default;
};

struct EngineConfig {
  double alpha = 0.3;                    // EMA weight of the newest sample
  std::int64_t ttl_proximity_ms = 15'000;
  std::int64_t ttl_sticker_ms = 450'000;
  beacon::KindMap kinds;
};

inline constexpr double kDefaultGateMinRssi = -90.0;

struct BeaconRecord {
  std::int64_t last_seen_ms = 0;
  double smoothed_rssi = 0.0;
  // Last status announced through an Entered/Exited event. The live status
  // is derived from last_seen_ms and the TTL.
  Presence announced = Presence::absent;
  std::uint64_t observations = 0;
};

// Presence state for one scan stream. Single writer; copies are cheap
// snapshots that may be read from other threads.
class RegionState {
 public:
  explicit RegionState(EngineConfig config = {});

  // Throws Error{OutOfOrderEvent} if event.t_ms precedes the last ingested
  // event and Error{InvalidEvent} for RSSI outside [-127, 0]. On throw the
  // state is unchanged.
  std::vector<RegionEvent> ingest(const ScanEvent& event);

  // Validates the whole batch before applying any of it.
  std::vector<RegionEvent> ingest_batch(std::span<const ScanEvent> events);

  struct StatusResult {
    Presence status;
    std::optional<RegionEvent> exited;  // set on the first query past expiry
  };
  // Throws Error{UnknownBeacon} for a beacon that was never observed.
  StatusResult region_status(const BeaconId& id, std::int64_t now_ms);

  // Pure read; false for unknown or expired beacons.
  bool gate_unlocked(const BeaconId& id, std::int64_t now_ms,
                     double min_rssi = kDefaultGateMinRssi) const;

  bool is_present(const BeaconId& id, std::int64_t now_ms) const;
  const BeaconRecord* find(const BeaconId& id) const;
  std::int64_t ttl_ms(const BeaconId& id) const;
  std::optional<std::int64_t> last_event_ms() const { return last_t_ms_; }
  const std::map<BeaconId, BeaconRecord>& records() const { return records_; }
  const EngineConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  // Restores records saved by to_json(); configuration comes from the caller.
  static RegionState from_json(const nlohmann::json& j, EngineConfig config);

 private:
  void validate(const ScanEvent& event, std::optional<std::int64_t> last) const;
  void apply(const ScanEvent& event, std::vector<RegionEvent>& out);

  EngineConfig config_;
  std::map<BeaconId, BeaconRecord> records_;
  std::optional<std::int64_t> last_t_ms_;
};

struct BeaconRate {
  BeaconId beacon;
  std::uint64_t broadcast_count = 0;
  double duration_min = 0.0;
  double rate_per_min = 0.0;
};

struct RateReport {
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::uint64_t total_events = 0;
  std::vector<BeaconRate> beacons;  // ordered by beacon id
};

// Counts events with t_start_ms <= t_ms <= t_end_ms.
// Throws Error{EmptyWindow} if t_end_ms <= t_start_ms.
RateReport broadcast_stats(const ScanLog& log, std::int64_t t_start_ms,
                           std::int64_t t_end_ms);

nlohmann::ordered_json to_json(const RateReport& report);

}  // namespace marge::proximity
