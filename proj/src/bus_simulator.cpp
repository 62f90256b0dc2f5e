#include "marge/bus_simulator.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "marge/error.h"
#include "marge/rng.h"

namespace marge::sim {

BeaconSpec BeaconSpec::proximity(BeaconId id, double rate) {
  BeaconSpec spec;
  spec.id = id;
  spec.kind = BeaconKind::proximity;
  spec.base_rate_per_min = rate;
  return spec;
}

BeaconSpec BeaconSpec::sticker(BeaconId id, double rate) {
  BeaconSpec spec;
  spec.id = id;
  spec.kind = BeaconKind::sticker;
  spec.base_rate_per_min = rate;
  return spec;
}

namespace {

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, why);
}

void validate_spec(const BeaconSpec& spec, std::size_t index) {
  const auto where = "beacons[" + std::to_string(index) + "]: ";
  if (!(spec.base_rate_per_min > 0.0) || !std::isfinite(spec.base_rate_per_min)) {
    invalid(where + "base_rate_per_min must be positive");
  }
  if (!(spec.position_attenuation > 0.0 && spec.position_attenuation <= 1.0)) {
    invalid(where + "position_attenuation must be in (0, 1]");
  }
  if (!(spec.rssi_stddev >= 0.0) || !std::isfinite(spec.rssi_mean)) {
    invalid(where + "rssi model must be finite with stddev >= 0");
  }
}

}  // namespace

void validate(const TripConfig& config) {
  if (config.beacons.empty()) invalid("beacon list is empty");
  if (!(config.duration_min > 0.0) || !std::isfinite(config.duration_min)) {
    invalid("duration_min must be positive");
  }
  if (!config.allow_any_duration &&
      (config.duration_min < 20.0 || config.duration_min > 40.0)) {
    invalid("duration_min must be within [20, 40] (override to allow)");
  }
  if (!(config.occupancy_factor > 0.0 && config.occupancy_factor <= 1.0)) {
    invalid("occupancy_factor must be in (0, 1]");
  }
  for (std::size_t i = 0; i < config.beacons.size(); ++i) {
    validate_spec(config.beacons[i], i);
  }
}

double effective_rate_per_min(const BeaconSpec& spec, const TripConfig& config) {
  const bool occupancy_applies =
      spec.kind == BeaconKind::sticker || config.occupancy_affects_proximity;
  return spec.base_rate_per_min * spec.position_attenuation *
         (occupancy_applies ? config.occupancy_factor : 1.0);
}

ScanLog simulate_trip(const TripConfig& config) {
  validate(config);
  const double duration_ms = config.duration_min * 60'000.0;

  struct Tagged {
    ScanEvent event;
    std::size_t beacon_index;
  };
  std::vector<Tagged> events;

  for (std::size_t b = 0; b < config.beacons.size(); ++b) {
    const auto& spec = config.beacons[b];
    const double rate_per_ms = effective_rate_per_min(spec, config) / 60'000.0;
    rng::Xoshiro256 gen(rng::derive_seed(config.seed, b));
    double t = gen.exponential(rate_per_ms);
    while (t < duration_ms) {
      const double rssi = std::clamp(
          std::round(gen.normal(spec.rssi_mean, spec.rssi_stddev)), -127.0, 0.0);
      events.push_back({ScanEvent{spec.id, static_cast<int>(rssi),
                                  static_cast<std::int64_t>(t)},
                        b});
      t += gen.exponential(rate_per_ms);
    }
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const Tagged& a, const Tagged& b) {
                     if (a.event.t_ms != b.event.t_ms) {
                       return a.event.t_ms < b.event.t_ms;
                     }
                     return a.beacon_index < b.beacon_index;
                   });
  ScanLog log;
  log.reserve(events.size());
  for (const auto& tagged : events) log.push_back(tagged.event);
  return log;
}

double detection_probability(double rate_per_min, double window_s,
                             std::uint64_t trials, std::uint64_t seed) {
  if (!(rate_per_min >= 0.0) || !(window_s > 0.0) || trials == 0) {
    throw Error(ErrorCode::InvalidConfig,
                "detection_probability needs rate >= 0, window > 0, trials >= 1");
  }
  if (rate_per_min == 0.0) return 0.0;
  const double rate_per_s = rate_per_min / 60.0;
  std::uint64_t detected = 0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    rng::Xoshiro256 gen(rng::derive_seed(seed, i));
    if (gen.exponential(rate_per_s) < window_s) ++detected;
  }
  return static_cast<double>(detected) / static_cast<double>(trials);
}

double analytic_detection_probability(double rate_per_min, double window_s) {
  return -std::expm1(-rate_per_min / 60.0 * window_s);
}

Recommendation recommend_installation(const std::vector<BeaconSpec>& beacons,
                                      double target_prob, double window_s) {
  if (beacons.empty()) invalid("beacon list is empty");
  if (!(target_prob > 0.0 && target_prob < 1.0)) {
    invalid("target probability must be in (0, 1)");
  }
  if (!(window_s > 0.0)) invalid("window must be positive");
  // Product of void probabilities == exp(-sum of rates * window).
  double total_rate = 0.0;
  for (const auto& spec : beacons) {
    total_rate += spec.base_rate_per_min * spec.position_attenuation;
  }
  Recommendation rec;
  rec.achieved_probability = analytic_detection_probability(total_rate, window_s);
  rec.sufficient = rec.achieved_probability >= target_prob;
  return rec;
}

TripConfig trip_config_from_json(const nlohmann::json& j) {
  try {
    TripConfig config;
    config.duration_min = j.value("duration_min", config.duration_min);
    config.seed = j.value("seed", config.seed);
    config.occupancy_factor = j.value("occupancy_factor", config.occupancy_factor);
    config.allow_any_duration =
        j.value("allow_any_duration", config.allow_any_duration);
    config.occupancy_affects_proximity =
        j.value("occupancy_affects_proximity", config.occupancy_affects_proximity);
    for (const auto& b : j.at("beacons")) {
      const auto kind = beacon::kind_from_name(b.value("kind", "proximity"));
      BeaconId id{beacon::uuid_from_hex(b.at("uuid").get<std::string>()),
                  b.at("major").get<std::uint16_t>(),
                  b.at("minor").get<std::uint16_t>()};
      BeaconSpec spec = kind == BeaconKind::sticker ? BeaconSpec::sticker(id)
                                                    : BeaconSpec::proximity(id);
      spec.base_rate_per_min = b.value("base_rate_per_min", spec.base_rate_per_min);
      spec.position_attenuation =
          b.value("position_attenuation", spec.position_attenuation);
      spec.rssi_mean = b.value("rssi_mean", spec.rssi_mean);
      spec.rssi_stddev = b.value("rssi_stddev", spec.rssi_stddev);
      config.beacons.push_back(spec);
    }
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("trip config: ") + e.what());
  }
}

}  // namespace marge::sim
