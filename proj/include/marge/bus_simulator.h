#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "marge/beacon_protocol.h"
#include "marge/scan_log.h"

namespace marge::sim {

using beacon::BeaconId;
using beacon::BeaconKind;

// Field-measured broadcast rates received inside a bus.
inline constexpr double kProximityRateMin = 7.5;
inline constexpr double kProximityRateMax = 10.0;
inline constexpr double kProximityRateTypical = 200.0 / 24.0;
inline constexpr double kStickerRate = 0.16;  // at the farthest position

struct BeaconSpec {
  BeaconId id;
  BeaconKind kind = BeaconKind::proximity;
  double base_rate_per_min = kProximityRateTypical;
  double position_attenuation = 1.0;  // (0, 1]
  double rssi_mean = -75.0;
  double rssi_stddev = 6.0;

  static BeaconSpec proximity(BeaconId id, double rate = kProximityRateTypical);
  static BeaconSpec sticker(BeaconId id, double rate = kStickerRate);
};

struct TripConfig {
  double duration_min = 24.0;
  std::vector<BeaconSpec> beacons;
  std::uint64_t seed = 0;
  double occupancy_factor = 1.0;  // (0, 1]; crowding only attenuates
  // Trips are 20-40 minutes; set to accept anything positive.
  bool allow_any_duration = false;
  // Occupancy attenuates stickers only unless this is set.
  bool occupancy_affects_proximity = false;
};

// Throws Error{InvalidConfig} describing the first violated constraint.
void validate(const TripConfig& config);

double effective_rate_per_min(const BeaconSpec& spec, const TripConfig& config);

// Homogeneous Poisson arrivals per beacon over [0, duration), RSSI
// Normal(mean, stddev) rounded and clamped to [-127, 0], merged by t_ms.
// Deterministic in (config, seed).
ScanLog simulate_trip(const TripConfig& config);

// Monte-Carlo estimate of P(at least one broadcast within window_s).
// Trial i uses an independent stream derived from (seed, i).
double detection_probability(double rate_per_min, double window_s,
                             std::uint64_t trials, std::uint64_t seed);

// 1 - exp(-rate * window).
double analytic_detection_probability(double rate_per_min, double window_s);

struct Recommendation {
  bool sufficient = false;
  double achieved_probability = 0.0;
};

// Combined probability that at least one of the beacons is heard within the
// window, assuming independent Poisson sources.
Recommendation recommend_installation(const std::vector<BeaconSpec>& beacons,
                                      double target_prob, double window_s);

// Config file form:
// {"duration_min": 24, "seed": 1, "occupancy_factor": 1.0,
//  "allow_any_duration": false,
//  "beacons": [{"uuid": hex, "major": 1, "minor": 1, "kind": "sticker",
//               "base_rate_per_min": 0.16, "position_attenuation": 1.0,
//               "rssi_mean": -75, "rssi_stddev": 6}]}
TripConfig trip_config_from_json(const nlohmann::json& j);

}  // namespace marge::sim
