#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "marge/adventure_engine.h"
#include "marge/catalog.h"
#include "marge/data_store.h"
#include "marge/error.h"
#include "marge/proximity_engine.h"

namespace httplib {
class Server;
}

namespace marge::api {

// HTTP status for every engine error. Never 500.
int http_status(ErrorCode code) noexcept;

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string catalog_path;
  store::StoreOptions store;  // data_dir unset: in-memory
  std::optional<std::filesystem::path> static_dir;
  std::chrono::milliseconds token_ttl = std::chrono::hours(24);
  std::size_t stream_backlog = 256;  // per subscriber, then dropped
  std::size_t worker_threads = 32;
  // Milliseconds since the Unix epoch; injectable for tests.
  std::function<std::int64_t()> clock;
};

// Applies MARGE_PORT and MARGE_DATA_DIR on top of flag values.
ServiceConfig apply_env(ServiceConfig config);

class EventHub;

// JSON-over-HTTP facade over the engine and the store. Keeps a proximity
// region per session. Engine calls are serialized behind one lock, so requests never
// interleave inside a session.
class Service {
 public:
  // Throws CatalogValidationError for a bad catalog.
  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, std::shared_ptr<const game::Catalog> catalog);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Returns the bound port (useful with port 0). Throws std::runtime_error
  // if the address is busy.
  int bind();
  // Blocks until stop().
  void listen();
  void stop();

  const game::AdventureEngine& engine() const { return engine_; }
  store::DocumentStore& store() { return *store_; }

 private:
  struct SessionRuntime {
    proximity::RegionState region;
    bool gate_reported_unlocked = false;
  };

  void install_routes();
  void load_state();
  void persist_user(const std::string& user_id);
  void persist_session(const std::string& session_id);
  void persist_region(const std::string& session_id);
  SessionRuntime& runtime(const std::string& session_id);
  std::int64_t region_clock(const std::string& session_id);
  void publish_game_events(const std::vector<game::GameEvent>& events);
  void publish_gate_status(const std::string& session_id);
  void publish_leaderboard();
  std::int64_t now() const;

  ServiceConfig config_;
  std::shared_ptr<const game::Catalog> catalog_;
  std::unique_ptr<store::DocumentStore> store_;
  proximity::EngineConfig region_config_;

  std::mutex mu_;
  game::AdventureEngine engine_;
  std::map<std::string, SessionRuntime> runtimes_;

  std::unique_ptr<EventHub> hub_;
  std::unique_ptr<httplib::Server> server_;
  std::atomic<bool> stopping_{false};
  bool bound_ = false;
};

}  // namespace marge::api
