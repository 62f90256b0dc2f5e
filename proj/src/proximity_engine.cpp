#include "marge/proximity_engine.h"

#include <string>

#include "marge/error.h"

namespace marge::proximity {

RegionState::RegionState(EngineConfig config) : config_(std::move(config)) {
  if (!(config_.alpha > 0.0 && config_.alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "smoothing alpha must be in (0, 1]");
  }
  if (config_.ttl_proximity_ms <= 0 || config_.ttl_sticker_ms <= 0) {
    throw Error(ErrorCode::InvalidConfig, "presence TTL must be positive");
  }
}

std::int64_t RegionState::ttl_ms(const BeaconId& id) const {
  return beacon::resolve_kind(config_.kinds, id) == beacon::BeaconKind::sticker
             ? config_.ttl_sticker_ms
             : config_.ttl_proximity_ms;
}

void RegionState::validate(const ScanEvent& event,
                           std::optional<std::int64_t> last) const {
  if (event.rssi < -127 || event.rssi > 0) {
    throw Error(ErrorCode::InvalidEvent,
                "rssi " + std::to_string(event.rssi) + " outside [-127, 0]");
  }
  if (last && event.t_ms < *last) {
    throw Error(ErrorCode::OutOfOrderEvent,
                "t_ms " + std::to_string(event.t_ms) + " precedes " +
                    std::to_string(*last));
  }
}

void RegionState::apply(const ScanEvent& event, std::vector<RegionEvent>& out) {
  auto [it, inserted] = records_.try_emplace(event.beacon);
  BeaconRecord& rec = it->second;
  if (inserted) {
    rec.smoothed_rssi = event.rssi;
  } else {
    if (rec.announced == Presence::present &&
        event.t_ms - rec.last_seen_ms > ttl_ms(event.beacon)) {
      // Expired without anyone asking; close the previous presence first.
      out.push_back({RegionEvent::Type::exited, event.beacon, event.t_ms});
      rec.announced = Presence::absent;
    }
    rec.smoothed_rssi = config_.alpha * event.rssi +
                        (1.0 - config_.alpha) * rec.smoothed_rssi;
  }
  rec.last_seen_ms = event.t_ms;
  ++rec.observations;
  if (rec.announced == Presence::absent) {
    rec.announced = Presence::present;
    out.push_back({RegionEvent::Type::entered, event.beacon, event.t_ms});
  }
  last_t_ms_ = event.t_ms;
}

std::vector<RegionEvent> RegionState::ingest(const ScanEvent& event) {
  validate(event, last_t_ms_);
  std::vector<RegionEvent> out;
  apply(event, out);
  return out;
}

std::vector<RegionEvent> RegionState::ingest_batch(
    std::span<const ScanEvent> events) {
  auto last = last_t_ms_;
  for (const auto& event : events) {
    validate(event, last);
    last = event.t_ms;
  }
  std::vector<RegionEvent> out;
  for (const auto& event : events) apply(event, out);
  return out;
}

RegionState::StatusResult RegionState::region_status(const BeaconId& id,
                                                     std::int64_t now_ms) {
  const auto it = records_.find(id);
  if (it == records_.end()) {
    throw Error(ErrorCode::UnknownBeacon,
                "beacon " + beacon::to_string(id) + " never observed");
  }
  BeaconRecord& rec = it->second;
  if (now_ms - rec.last_seen_ms <= ttl_ms(id)) {
    return {Presence::present, std::nullopt};
  }
  StatusResult result{Presence::absent, std::nullopt};
  if (rec.announced == Presence::present) {
    rec.announced = Presence::absent;
    result.exited = RegionEvent{RegionEvent::Type::exited, id, now_ms};
  }
  return result;
}

bool RegionState::is_present(const BeaconId& id, std::int64_t now_ms) const {
  const auto* rec = find(id);
  return rec != nullptr && now_ms - rec->last_seen_ms <= ttl_ms(id);
}

bool RegionState::gate_unlocked(const BeaconId& id, std::int64_t now_ms,
                                double min_rssi) const {
  const auto* rec = find(id);
  return rec != nullptr && now_ms - rec->last_seen_ms <= ttl_ms(id) &&
         rec->smoothed_rssi >= min_rssi;
}

const BeaconRecord* RegionState::find(const BeaconId& id) const {
  const auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

nlohmann::json RegionState::to_json() const {
  nlohmann::json beacons = nlohmann::json::array();
  for (const auto& [id, rec] : records_) {
    beacons.push_back({{"uuid", beacon::uuid_to_hex(id.uuid)},
                       {"major", id.major},
                       {"minor", id.minor},
                       {"last_seen_ms", rec.last_seen_ms},
                       {"smoothed_rssi", rec.smoothed_rssi},
                       {"present", rec.announced == Presence::present},
                       {"observations", rec.observations}});
  }
  nlohmann::json j{{"beacons", std::move(beacons)}};
  j["last_t_ms"] = last_t_ms_ ? nlohmann::json(*last_t_ms_) : nlohmann::json();
  return j;
}

RegionState RegionState::from_json(const nlohmann::json& j,
                                   EngineConfig config) {
  RegionState state(std::move(config));
  for (const auto& b : j.at("beacons")) {
    BeaconId id{beacon::uuid_from_hex(b.at("uuid").get<std::string>()),
                b.at("major").get<std::uint16_t>(),
                b.at("minor").get<std::uint16_t>()};
    BeaconRecord rec;
    rec.last_seen_ms = b.at("last_seen_ms").get<std::int64_t>();
    rec.smoothed_rssi = b.at("smoothed_rssi").get<double>();
    rec.announced = b.at("present").get<bool>() ? Presence::present
                                                : Presence::absent;
    rec.observations = b.at("observations").get<std::uint64_t>();
    state.records_[id] = rec;
  }
  if (j.contains("last_t_ms") && !j["last_t_ms"].is_null()) {
    state.last_t_ms_ = j["last_t_ms"].get<std::int64_t>();
  }
  return state;
}

RateReport broadcast_stats(const ScanLog& log, std::int64_t t_start_ms,
                           std::int64_t t_end_ms) {
  if (t_end_ms <= t_start_ms) {
    throw Error(ErrorCode::EmptyWindow, "window end must follow its start");
  }
  RateReport report;
  report.t_start_ms = t_start_ms;
  report.t_end_ms = t_end_ms;
  const double duration_min =
      static_cast<double>(t_end_ms - t_start_ms) / 60'000.0;

  std::map<BeaconId, std::uint64_t> counts;
  for (const auto& event : log) {
    if (event.t_ms < t_start_ms || event.t_ms > t_end_ms) continue;
    ++counts[event.beacon];
    ++report.total_events;
  }
  for (const auto& [id, count] : counts) {
    report.beacons.push_back(
        {id, count, duration_min, static_cast<double>(count) / duration_min});
  }
  return report;
}

nlohmann::ordered_json to_json(const RateReport& report) {
  nlohmann::ordered_json j;
  j["t_start_ms"] = report.t_start_ms;
  j["t_end_ms"] = report.t_end_ms;
  j["total_events"] = report.total_events;
  auto& beacons = j["beacons"] = nlohmann::ordered_json::array();
  for (const auto& b : report.beacons) {
    nlohmann::ordered_json row;
    row["uuid"] = beacon::uuid_to_hex(b.beacon.uuid);
    row["major"] = b.beacon.major;
    row["minor"] = b.beacon.minor;
    row["broadcast_count"] = b.broadcast_count;
    row["duration_min"] = b.duration_min;
    row["rate_per_min"] = b.rate_per_min;
    beacons.push_back(std::move(row));
  }
  return j;
}

}  // namespace marge::proximity
