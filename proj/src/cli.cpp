#include "marge/cli.h"

#include <pthread.h>
#include <signal.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "marge/api_service.h"
#include "marge/bus_simulator.h"
#include "marge/catalog.h"
#include "marge/evaluation_kit.h"
#include "marge/proximity_engine.h"
#include "marge/scan_log.h"

namespace marge::cli {

namespace {

using nlohmann::json;

constexpr const char* kDemoUuid = "b9407f30-f5f8-466e-aff9-25556b57fe6d";

struct SimulateArgs {
  double duration_min = 24.0;
  double proximity_rate = sim::kProximityRateTypical;
  int proximity = 1;
  int stickers = 0;
  double sticker_rate = sim::kStickerRate;
  double occupancy = 1.0;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  bool allow_any_duration = false;
};

struct AnalyzeArgs {
  std::string log;
  double duration_min = 0.0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = -1;
};

struct RecommendArgs {
  int proximity = 0;
  int stickers = 0;
  double proximity_rate = sim::kProximityRateMin;
  double sticker_rate = sim::kStickerRate;
  double target = 0.99;
  double window_s = 300.0;
};

struct EvalArgs {
  std::string csv;
  std::string format = "json";
  std::string bands;
};

struct ServeArgs {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string catalog = "data/catalog.json";
  std::string data_dir;
  std::string static_dir;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "'" + path + "' is not valid JSON: " + e.what());
  }
}

sim::TripConfig trip_config(const SimulateArgs& a) {
  if (!a.config.empty()) return sim::trip_config_from_json(read_json_file(a.config));
  sim::TripConfig config;
  config.duration_min = a.duration_min;
  config.seed = a.seed;
  config.occupancy_factor = a.occupancy;
  config.allow_any_duration = a.allow_any_duration;
  const auto uuid = beacon::uuid_from_hex(kDemoUuid);
  for (int i = 0; i < a.proximity; ++i) {
    config.beacons.push_back(sim::BeaconSpec::proximity(
        {uuid, 20, static_cast<std::uint16_t>(1 + i)}, a.proximity_rate));
  }
  // Stickers start at minor 7 so the first one is the seeded sticker gate.
  for (int i = 0; i < a.stickers; ++i) {
    config.beacons.push_back(sim::BeaconSpec::sticker(
        {uuid, 1, static_cast<std::uint16_t>(7 + i)}, a.sticker_rate));
  }
  return config;
}

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto log = sim::simulate_trip(trip_config(a));
  if (a.out.empty() || a.out == "-") {
    write_scan_log(out, log);
  } else {
    std::ofstream file(a.out, std::ios::trunc | std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + a.out + "'");
    write_scan_log(file, log);
  }
  return 0;
}

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
  ScanLog log;
  if (a.log == "-") {
    log = read_scan_log(std::cin);
  } else {
    auto in = open_input(a.log);
    log = read_scan_log(in);
  }
  std::int64_t end = a.end_ms;
  if (end < 0 && a.duration_min > 0) {
    end = a.start_ms + static_cast<std::int64_t>(std::llround(a.duration_min * 60000.0));
  }
  if (end < 0) {
    // Round the last event up to a whole minute.
    const std::int64_t last = log.empty() ? 0 : log.back().t_ms;
    end = (last / 60000 + 1) * 60000;
  }
  out << to_json(proximity::broadcast_stats(log, a.start_ms, end)).dump(2) << "\n";
  return 0;
}

int do_recommend(const RecommendArgs& a, std::ostream& out) {
  std::vector<sim::BeaconSpec> beacons;
  const auto uuid = beacon::uuid_from_hex(kDemoUuid);
  for (int i = 0; i < a.proximity; ++i) {
    beacons.push_back(sim::BeaconSpec::proximity(
        {uuid, 20, static_cast<std::uint16_t>(1 + i)}, a.proximity_rate));
  }
  for (int i = 0; i < a.stickers; ++i) {
    beacons.push_back(sim::BeaconSpec::sticker(
        {uuid, 1, static_cast<std::uint16_t>(7 + i)}, a.sticker_rate));
  }
  const auto rec = sim::recommend_installation(beacons, a.target, a.window_s);
  out << json{{"proximity_beacons", a.proximity},
              {"stickers", a.stickers},
              {"target", a.target},
              {"window_s", a.window_s},
              {"achieved_probability", rec.achieved_probability},
              {"sufficient", rec.sufficient}}
             .dump(2)
      << "\n";
  return 0;
}

int do_sus(const EvalArgs& a, std::ostream& out) {
  auto in = open_input(a.csv);
  const auto responses = eval::read_sus_csv(in);
  const auto bands =
      a.bands.empty() ? eval::default_sus_bands() : eval::sus_bands_from_json(read_json_file(a.bands));
  const auto summary = eval::summarize_sus(responses, bands);
  if (a.format == "text") {
    out << eval::format_sus_table(summary);
  } else {
    out << to_json(summary).dump(2) << "\n";
  }
  return 0;
}

int do_tasks(const EvalArgs& a, std::ostream& out) {
  auto in = open_input(a.csv);
  const auto metrics = eval::task_metrics_by_task(eval::read_task_csv(in));
  if (a.format == "text") {
    out << eval::format_task_table(metrics);
    return 0;
  }
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& m : metrics) j.push_back(to_json(m));
  out << j.dump(2) << "\n";
  return 0;
}

int do_validate(const std::string& path, std::ostream& out) {
  try {
    const auto catalog = game::load_catalog(read_json_file(path));
    out << json{{"valid", true},
                {"languages", catalog.languages},
                {"adventures", catalog.adventures.size()},
                {"badges", catalog.badges.size()}}
               .dump(2)
        << "\n";
    return 0;
  } catch (const game::CatalogValidationError& e) {
    json issues = json::array();
    for (const auto& issue : e.issues()) {
      issues.push_back({{"path", issue.path}, {"message", issue.message}});
    }
    out << json{{"valid", false}, {"issues", issues}}.dump(2) << "\n";
    return 1;
  }
}

int do_serve(const ServeArgs& a, std::ostream& err) {
  api::ServiceConfig config;
  config.host = a.host;
  config.port = a.port;
  config.catalog_path = a.catalog;
  if (!a.data_dir.empty()) config.store.data_dir = a.data_dir;
  if (!a.static_dir.empty()) config.static_dir = a.static_dir;
  config = api::apply_env(config);

  // Signals are taken by a dedicated thread so stop() never runs in a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  api::Service service(config);
  const int port = service.bind();
  err << "marge: listening on " << config.host << ":" << port;
  if (config.store.data_dir) err << " (data " << config.store.data_dir->string() << ")";
  err << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MARGe headless toolkit", "marge"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded in-bus scan log (JSONL)");
  simulate->add_option("--duration-min", sim_args.duration_min, "Trip length in minutes")
      ->capture_default_str();
  simulate->add_option("--proximity-rate", sim_args.proximity_rate,
                       "Proximity beacon broadcasts per minute")
      ->capture_default_str();
  simulate->add_option("--proximity", sim_args.proximity, "Number of proximity beacons")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--stickers", sim_args.stickers, "Number of sticker beacons")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--sticker-rate", sim_args.sticker_rate, "Sticker broadcasts per minute")
      ->capture_default_str();
  simulate->add_option("--occupancy", sim_args.occupancy, "Occupancy attenuation in (0, 1]")
      ->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--config", sim_args.config, "Trip config JSON file (overrides flags)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_args.out, "Output file (default stdout)");
  simulate->add_flag("--allow-any-duration", sim_args.allow_any_duration,
                     "Accept durations outside 20-40 minutes");

  AnalyzeArgs an_args;
  auto* analyze = app.add_subcommand("analyze", "Broadcast counts and rates of a scan log");
  analyze->add_option("log", an_args.log, "Scan log (JSONL, '-' for stdin)")->required();
  auto* an_duration =
      analyze->add_option("--duration-min", an_args.duration_min, "Window length in minutes");
  analyze->add_option("--start-ms", an_args.start_ms, "Window start")->capture_default_str();
  analyze->add_option("--end-ms", an_args.end_ms, "Window end (inclusive)")
      ->excludes(an_duration);

  RecommendArgs rec_args;
  auto* recommend = app.add_subcommand("recommend", "Check a beacon installation");
  recommend->add_option("--proximity", rec_args.proximity, "Proximity beacons")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  recommend->add_option("--stickers", rec_args.stickers, "Sticker beacons")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  recommend->add_option("--proximity-rate", rec_args.proximity_rate, "Per-beacon rate")
      ->capture_default_str();
  recommend->add_option("--sticker-rate", rec_args.sticker_rate, "Per-sticker rate")
      ->capture_default_str();
  recommend->add_option("--target", rec_args.target, "Target detection probability")
      ->capture_default_str();
  recommend->add_option("--window-s", rec_args.window_s, "Detection window in seconds")
      ->capture_default_str();

  EvalArgs sus_args;
  auto* sus = app.add_subcommand("sus", "Score SUS questionnaires");
  sus->add_option("csv", sus_args.csv, "One respondent per row, ten items")->required();
  sus->add_option("--format", sus_args.format)
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  sus->add_option("--bands", sus_args.bands, "Band table JSON")->check(CLI::ExistingFile);

  EvalArgs task_args;
  auto* tasks = app.add_subcommand("tasks", "Per-task duration and error statistics");
  tasks->add_option("csv", task_args.csv, "task_id,duration_s,errors rows")->required();
  tasks->add_option("--format", task_args.format)
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  std::string catalog_path;
  auto* validate = app.add_subcommand("validate-catalog", "Validate an adventure catalog");
  validate->add_option("file", catalog_path, "Catalog JSON")->required();

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", serve_args.host)->capture_default_str();
  serve->add_option("--port", serve_args.port, "Overridden by MARGE_PORT")
      ->capture_default_str()
      ->check(CLI::Range(0, 65535));
  serve->add_option("--catalog", serve_args.catalog)->capture_default_str();
  serve->add_option("--data-dir", serve_args.data_dir, "Overridden by MARGE_DATA_DIR");
  serve->add_option("--static-dir", serve_args.static_dir, "Serve a web client from here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*simulate) return do_simulate(sim_args, out);
    if (*analyze) return do_analyze(an_args, out);
    if (*recommend) return do_recommend(rec_args, out);
    if (*sus) return do_sus(sus_args, out);
    if (*tasks) return do_tasks(task_args, out);
    if (*validate) return do_validate(catalog_path, out);
    if (*serve) return do_serve(serve_args, err);
  } catch (const Error& e) {
    err << "error: " << error_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace marge::cli
