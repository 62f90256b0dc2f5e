#include "marge/api_service.h"

#include <sodium.h>

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <vector>

#include <httplib.h>

namespace marge::api {

using nlohmann::json;
using store::DocumentPath;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedFrame:
    case ErrorCode::InvalidExponent:
    case ErrorCode::InvalidEvent:
    case ErrorCode::EmptyWindow:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ValidationError:
    case ErrorCode::UnknownLanguage:
    case ErrorCode::WrongInputKind:
    case ErrorCode::IncompleteQuiz:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::EmptyFeedback:
    case ErrorCode::TooLong:
    case ErrorCode::InvalidPath:
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidResponse:
    case ErrorCode::OutOfRange:
    case ErrorCode::EmptyInput:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::UnknownBeacon:
    case ErrorCode::UnknownAdventure:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownUser:
    case ErrorCode::UnknownEgg:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::OutOfOrderEvent:
    case ErrorCode::UnavailableAdventure:
    case ErrorCode::SessionComplete:
    case ErrorCode::GateLocked:
    case ErrorCode::AlreadyAnswered:
    case ErrorCode::NotAQuizStage:
    case ErrorCode::DuplicateLogin:
    case ErrorCode::TransformFailed:
      return 409;
    case ErrorCode::UnsupportedMediaType:
      return 415;
    case ErrorCode::NotImplemented:
      return 501;
  }
  return 400;
}

ServiceConfig apply_env(ServiceConfig config) {
  if (const char* port = std::getenv("MARGE_PORT"); port && *port) {
    config.port = std::atoi(port);
  }
  config.store = store::options_from_env(config.store);
  return config;
}

// Server-sent event fan-out. One bounded queue per subscriber; a subscriber
// that falls `backlog` messages behind is closed.
class EventHub {
 public:
  struct Subscriber {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> queue;
    bool closed = false;
  };

  explicit EventHub(std::size_t backlog) : backlog_(backlog) {}

  std::shared_ptr<Subscriber> subscribe(const std::string& topic) {
    auto sub = std::make_shared<Subscriber>();
    std::lock_guard lock(mu_);
    topics_[topic].push_back(sub);
    return sub;
  }

  void unsubscribe(const std::string& topic, const std::shared_ptr<Subscriber>& sub) {
    std::lock_guard lock(mu_);
    auto& subs = topics_[topic];
    std::erase(subs, sub);
    if (subs.empty()) topics_.erase(topic);
  }

  void publish(const std::string& topic, std::string_view event, const json& data) {
    std::lock_guard lock(mu_);
    const auto seq = ++sequence_[topic];
    const auto it = topics_.find(topic);
    if (it == topics_.end()) return;
    std::string message = "id: " + std::to_string(seq) + "\nevent: " +
                          std::string(event) + "\ndata: " + data.dump() + "\n\n";
    std::erase_if(it->second, [&](const std::shared_ptr<Subscriber>& sub) {
      std::lock_guard sub_lock(sub->mu);
      if (sub->closed) return true;
      if (sub->queue.size() >= backlog_) {
        sub->closed = true;
        sub->queue.clear();
        sub->cv.notify_all();
        return true;
      }
      sub->queue.push_back(message);
      sub->cv.notify_all();
      return false;
    });
  }

  void close_all() {
    std::lock_guard lock(mu_);
    for (auto& [topic, subs] : topics_) {
      for (auto& sub : subs) {
        std::lock_guard sub_lock(sub->mu);
        sub->closed = true;
        sub->cv.notify_all();
      }
    }
  }

 private:
  std::size_t backlog_;
  std::mutex mu_;
  std::map<std::string, std::vector<std::shared_ptr<Subscriber>>> topics_;
  std::map<std::string, std::uint64_t> sequence_;
};

namespace {

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> raw(bytes);
  randombytes_buf(raw.data(), raw.size());
  std::string hex(bytes * 2 + 1, '\0');
  sodium_bin2hex(hex.data(), hex.size(), raw.data(), raw.size());
  hex.pop_back();
  return hex;
}

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code,
                 const std::string& message) {
  reply(res, status, {{"code", code}, {"message", message}});
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), error_name(e.code()), e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, error_name(ErrorCode::BadRequest), e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "InternalError", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  const auto type = req.get_header_value("Content-Type");
  if (type.rfind("application/json", 0) != 0) {
    throw Error(ErrorCode::UnsupportedMediaType, "expected Content-Type application/json");
  }
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

json object_body(const httplib::Request& req) {
  json body = parse_body(req);
  if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
  return body;
}

std::string required_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' is required");
  }
  return it->get<std::string>();
}

std::size_t required_index(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + key + "' must be an integer");
  }
  if (it->get<std::int64_t>() < 0) {
    throw Error(ErrorCode::IndexOutOfRange, std::string("field '") + key + "' is negative");
  }
  return it->get<std::size_t>();
}

game::StageInput parse_stage_input(const std::string& name) {
  if (name == "ack") return game::StageInput::ack;
  if (name == "gate") return game::StageInput::gate_request;
  if (name == "quiz") return game::StageInput::quiz_submit;
  throw Error(ErrorCode::BadRequest, "input must be one of ack, gate, quiz");
}

std::string_view start_kind_name(game::StartResult::Kind kind) {
  switch (kind) {
    case game::StartResult::Kind::new_session: return "new_session";
    case game::StartResult::Kind::resume_prompt: return "resume_prompt";
    case game::StartResult::Kind::completed_prompt: return "completed_prompt";
  }
  return "new_session";
}

}  // namespace

Service::Service(ServiceConfig config)
    : Service(config,
              std::make_shared<const game::Catalog>(
                  game::load_catalog_file(config.catalog_path))) {}

Service::Service(ServiceConfig config, std::shared_ptr<const game::Catalog> catalog)
    : config_(std::move(config)),
      catalog_(std::move(catalog)),
      store_(std::make_unique<store::DocumentStore>(config_.store)),
      engine_(catalog_, [] { return "s" + random_hex(12); }),
      hub_(std::make_unique<EventHub>(config_.stream_backlog)),
      server_(std::make_unique<httplib::Server>()) {
  if (!config_.clock) config_.clock = system_now_ms;
  region_config_.kinds = catalog_->beacon_kinds();
  load_state();
  const auto threads = config_.worker_threads;
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  if (config_.static_dir) server_->set_mount_point("/", config_.static_dir->string());
  install_routes();
}

Service::~Service() { stop(); }

std::int64_t Service::now() const { return config_.clock(); }

void Service::load_state() {
  if (const auto users = store_->try_get(DocumentPath({"users"}))) {
    for (const auto& [uid, doc] : users->items()) {
      if (doc.contains("game")) {
        engine_.restore_user(game::user_profile_from_json(doc["game"]));
      } else {
        engine_.add_user(uid);
      }
    }
  }
  if (const auto sessions = store_->try_get(DocumentPath({"sessions"}))) {
    for (const auto& [sid, doc] : sessions->items()) {
      if (!doc.contains("state")) continue;
      engine_.restore_session(game::session_from_json(doc["state"]));
      SessionRuntime rt{proximity::RegionState(region_config_), false};
      if (doc.contains("region")) {
        rt.region = proximity::RegionState::from_json(doc["region"], region_config_);
      }
      runtimes_.emplace(sid, std::move(rt));
    }
  }
}

void Service::persist_user(const std::string& user_id) {
  store_->put(DocumentPath({"users", user_id, "game"}),
              game::to_json(engine_.user(user_id)));
}

void Service::persist_session(const std::string& session_id) {
  store_->put(DocumentPath({"sessions", session_id, "state"}),
              game::to_json(engine_.session(session_id)));
}

void Service::persist_region(const std::string& session_id) {
  store_->put(DocumentPath({"sessions", session_id, "region"}),
              runtime(session_id).region.to_json());
}

Service::SessionRuntime& Service::runtime(const std::string& session_id) {
  auto it = runtimes_.find(session_id);
  if (it == runtimes_.end()) {
    it = runtimes_.emplace(session_id,
                           SessionRuntime{proximity::RegionState(region_config_), false})
             .first;
  }
  return it->second;
}

std::int64_t Service::region_clock(const std::string& session_id) {
  return runtime(session_id).region.last_event_ms().value_or(0);
}

void Service::publish_game_events(const std::vector<game::GameEvent>& events) {
  bool points_changed = false;
  for (const auto& e : events) {
    if (e.type == game::GameEvent::Type::points_awarded) points_changed = true;
    if (!e.session_id.empty()) {
      hub_->publish("session:" + e.session_id, game::event_type_name(e.type),
                    game::to_json(e));
    }
  }
  if (points_changed) publish_leaderboard();
}

void Service::publish_leaderboard() {
  json entries = json::array();
  for (const auto& e : engine_.leaderboard_top(10)) entries.push_back(game::to_json(e));
  hub_->publish("leaderboard", "leaderboard_changed", {{"entries", std::move(entries)}});
}

void Service::publish_gate_status(const std::string& session_id) {
  const auto& s = engine_.session(session_id);
  if (s.status != game::SessionStatus::active) return;
  const auto* gate = std::get_if<game::BeaconGateStage>(engine_.current_stage(s));
  if (!gate) return;
  auto& rt = runtime(session_id);
  const bool unlocked =
      rt.region.gate_unlocked(gate->beacon, region_clock(session_id), gate->min_rssi);
  if (unlocked == rt.gate_reported_unlocked) return;
  rt.gate_reported_unlocked = unlocked;
  hub_->publish("session:" + session_id, "gate_status",
                {{"session_id", session_id},
                 {"stage_index", s.stage_index},
                 {"beacon", beacon::to_string(gate->beacon)},
                 {"gate_unlocked", unlocked}});
}

int Service::bind() {
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
    if (port < 0) throw std::runtime_error("cannot bind " + config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(port) +
                             " (address in use?)");
  }
  bound_ = true;
  return port;
}

void Service::listen() {
  if (!bound_) bind();
  server_->listen_after_bind();
}

void Service::stop() {
  stopping_ = true;
  if (hub_) hub_->close_all();
  if (server_) server_->stop();
}

void Service::install_routes() {
  auto& srv = *server_;

  // Resolves the bearer token (header, or ?token= for EventSource clients).
  auto authenticate = [this](const httplib::Request& req) {
    std::string token;
    const auto header = req.get_header_value("Authorization");
    if (header.rfind("Bearer ", 0) == 0) {
      token = header.substr(7);
    } else if (req.has_param("token")) {
      token = req.get_param_value("token");
    }
    if (token.empty() || token.find('/') != std::string::npos) {
      throw Error(ErrorCode::Unauthorized, "missing bearer token");
    }
    const auto entry = store_->try_get(DocumentPath({"auth", "tokens", token}));
    if (!entry || entry->at("expires_at").get<std::int64_t>() < now()) {
      throw Error(ErrorCode::Unauthorized, "invalid or expired token");
    }
    return entry->at("user_id").get<std::string>();
  };

  auto owned_session = [this](const std::string& user_id, const std::string& sid)
      -> const game::Session& {
    const auto& s = engine_.session(sid);
    if (s.user_id != user_id) throw Error(ErrorCode::Forbidden, "not your session");
    return s;
  };

  auto require_self = [](const std::string& user_id, const std::string& target) {
    if (user_id != target) throw Error(ErrorCode::Forbidden, "not your account");
  };

  auto session_view = [this](const game::Session& s, const std::string& lang_hint) {
    std::string lang = lang_hint;
    if (lang.empty()) lang = engine_.user(s.user_id).language;
    if (lang.empty()) lang = catalog_->languages.front();
    if (!catalog_->has_language(lang)) {
      throw Error(ErrorCode::UnknownLanguage, "language '" + lang + "' is not configured");
    }
    const auto& adv = *catalog_->find_adventure(s.adventure_id);
    json view{{"session", game::to_json(s)}, {"stage_count", adv.stages.size()}};
    const auto* stage = engine_.current_stage(s);
    view["stage"] = stage ? game::stage_view(*stage, lang) : json();
    if (const auto* gate = stage ? std::get_if<game::BeaconGateStage>(stage) : nullptr) {
      view["gate_unlocked"] = runtime(s.id).region.gate_unlocked(
          gate->beacon, region_clock(s.id), gate->min_rssi);
    }
    return view;
  };

  auto stream = [this](const std::string& topic, httplib::Response& res) {
    auto sub = hub_->subscribe(topic);
    res.set_header("Cache-Control", "no-cache");
    auto greeted = std::make_shared<bool>(false);
    auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(
        std::chrono::steady_clock::now());
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, sub, greeted, last_write](std::size_t, httplib::DataSink& sink) {
          if (!*greeted) {
            *greeted = true;
            static constexpr std::string_view hello = ": connected\n\n";
            return sink.write(hello.data(), hello.size());
          }
          std::unique_lock lock(sub->mu);
          sub->cv.wait_for(lock, std::chrono::milliseconds(200),
                           [&] { return !sub->queue.empty() || sub->closed; });
          if (sub->queue.empty()) {
            if (sub->closed || stopping_) return false;
            lock.unlock();
            const auto now_tp = std::chrono::steady_clock::now();
            if (now_tp - *last_write > std::chrono::seconds(15)) {
              *last_write = now_tp;
              static constexpr std::string_view beat = ": keepalive\n\n";
              return sink.write(beat.data(), beat.size());
            }
            return sink.is_writable();
          }
          std::string message = std::move(sub->queue.front());
          sub->queue.pop_front();
          lock.unlock();
          *last_write = std::chrono::steady_clock::now();
          return sink.write(message.data(), message.size());
        },
        [this, topic, sub](bool) { hub_->unsubscribe(topic, sub); });
  };

  srv.Post("/auth/register", guarded([this](const auto& req, auto& res) {
    const json body = object_body(req);
    const auto login = required_string(body, "login");
    const auto password = required_string(body, "password");
    const std::string language = body.value("language", "");
    if (!language.empty() && !catalog_->has_language(language)) {
      throw Error(ErrorCode::UnknownLanguage, "language '" + language + "' is not configured");
    }
    const auto user_id = store_->register_user(login, password);
    std::lock_guard lock(mu_);
    engine_.add_user(user_id, language);
    persist_user(user_id);
    if (!language.empty()) store_->put(DocumentPath({"users", user_id, "lang"}), language);
    reply(res, 201, {{"user_id", user_id}});
  }));

  srv.Post("/auth/login", guarded([this](const auto& req, auto& res) {
    const json body = object_body(req);
    const auto user_id =
        store_->verify(required_string(body, "login"), required_string(body, "password"));
    if (!user_id) throw Error(ErrorCode::Unauthorized, "wrong login or password");
    const auto token = random_hex(32);
    const auto expires_at = now() + config_.token_ttl.count();
    store_->put(DocumentPath({"auth", "tokens", token}),
                {{"user_id", *user_id}, {"expires_at", expires_at}});
    const auto lang = store_->try_get(DocumentPath({"users", *user_id, "lang"}));
    reply(res, 200, {{"token", token},
                     {"user_id", *user_id},
                     {"expires_at", expires_at},
                     {"language", lang ? *lang : json()}});
  }));

  srv.Post("/auth/forgot-password", guarded([](const auto&, auto&) {
    throw Error(ErrorCode::NotImplemented, "password recovery needs an e-mail channel");
  }));

  srv.Get("/catalog", guarded([this](const auto& req, auto& res) {
    const auto lang = req.has_param("lang") ? req.get_param_value("lang")
                                            : catalog_->languages.front();
    json cards = json::array();
    for (const auto& card : game::list_adventures(*catalog_, lang)) {
      cards.push_back(game::to_json(card));
    }
    reply(res, 200, {{"language", lang},
                     {"languages", catalog_->languages},
                     {"adventures", std::move(cards)}});
  }));

  srv.Get("/catalog/:id", guarded([this](const auto& req, auto& res) {
    const auto lang = req.has_param("lang") ? req.get_param_value("lang")
                                            : catalog_->languages.front();
    const auto& id = req.path_params.at("id");
    for (const auto& card : game::list_adventures(*catalog_, lang)) {
      if (card.id == id) return reply(res, 200, game::to_json(card));
    }
    throw Error(ErrorCode::UnknownAdventure, "unknown adventure '" + id + "'");
  }));

  srv.Put("/users/:id/language",
          guarded([this, authenticate, require_self](const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    require_self(user_id, req.path_params.at("id"));
    const auto language = required_string(object_body(req), "language");
    std::lock_guard lock(mu_);
    engine_.set_language(user_id, language);
    persist_user(user_id);
    store_->put(DocumentPath({"users", user_id, "lang"}), language);
    reply(res, 200, {{"language", language}});
  }));

  srv.Post("/sessions", guarded([this, authenticate, session_view](const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    const json body = object_body(req);
    const auto adventure_id = required_string(body, "adventure_id");
    const bool replay = body.value("replay", false);
    std::lock_guard lock(mu_);
    const auto result = engine_.start_session(user_id, adventure_id, now(), replay);
    json out = session_view(result.session, req.get_param_value("lang"));
    out["result"] = start_kind_name(result.kind);
    if (result.kind == game::StartResult::Kind::new_session) {
      runtimes_.erase(result.session.id);
      persist_session(result.session.id);
      return reply(res, 201, out);
    }
    reply(res, 200, out);
  }));

  srv.Get("/sessions/:id", guarded([this, authenticate, owned_session, session_view](
                                       const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    std::lock_guard lock(mu_);
    const auto& s = owned_session(user_id, req.path_params.at("id"));
    reply(res, 200, session_view(s, req.get_param_value("lang")));
  }));

  srv.Post("/sessions/:id/resume", guarded([this, authenticate, owned_session, session_view](
                                               const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    const auto choice_name = required_string(object_body(req), "choice");
    game::ResumeChoice choice;
    if (choice_name == "resume") {
      choice = game::ResumeChoice::resume;
    } else if (choice_name == "restart") {
      choice = game::ResumeChoice::restart;
    } else {
      throw Error(ErrorCode::BadRequest, "choice must be resume or restart");
    }
    std::lock_guard lock(mu_);
    const auto sid = owned_session(user_id, req.path_params.at("id")).id;
    const auto& s = engine_.resume_or_restart(sid, choice, now());
    if (choice == game::ResumeChoice::restart) {
      persist_session(sid);
      runtime(sid).gate_reported_unlocked = false;
      hub_->publish("session:" + sid, "session_restarted",
                    {{"session_id", sid}, {"stage_index", s.stage_index}, {"score", s.score}});
      publish_gate_status(sid);
    }
    reply(res, 200, session_view(s, req.get_param_value("lang")));
  }));

  srv.Post("/sessions/:id/advance", guarded([this, authenticate, owned_session, session_view](
                                                const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    const json body = object_body(req);
    const auto input = parse_stage_input(required_string(body, "input"));
    std::lock_guard lock(mu_);
    const auto sid = owned_session(user_id, req.path_params.at("id")).id;
    const auto region_now = body.contains("now_ms") ? body["now_ms"].get<std::int64_t>()
                                                    : region_clock(sid);
    const auto result =
        engine_.advance_stage(sid, input, runtime(sid).region, region_now, now());
    persist_session(sid);
    if (result.session.status == game::SessionStatus::complete) persist_user(user_id);
    publish_game_events(result.events);
    runtime(sid).gate_reported_unlocked = false;
    publish_gate_status(sid);
    json out = session_view(result.session, req.get_param_value("lang"));
    json events = json::array();
    for (const auto& e : result.events) events.push_back(game::to_json(e));
    out["events"] = std::move(events);
    reply(res, 200, out);
  }));

  srv.Post("/sessions/:id/answer", guarded([this, authenticate, owned_session](
                                               const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    const json body = object_body(req);
    const auto question = required_index(body, "question_index");
    const auto choice = required_index(body, "choice_index");
    std::lock_guard lock(mu_);
    const auto sid = owned_session(user_id, req.path_params.at("id")).id;
    const auto outcome = engine_.answer_quiz(sid, question, choice, now());
    persist_session(sid);
    publish_game_events(outcome.events);
    json out{{"correct", outcome.correct},
             {"score_delta", outcome.score_delta},
             {"score", outcome.new_score}};
    if (!outcome.correct) out["correct_index"] = outcome.correct_index;
    reply(res, 200, out);
  }));

  srv.Post("/sessions/:id/scan-events", guarded([this, authenticate, owned_session](
                                                    const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    const json body = parse_body(req);
    const json& items = body.is_array() ? body : body.at("events");
    if (!items.is_array()) throw Error(ErrorCode::BadRequest, "events must be an array");
    ScanLog batch;
    batch.reserve(items.size());
    for (const auto& item : items) batch.push_back(scan_event_from_json(item));

    std::lock_guard lock(mu_);
    const auto& s = owned_session(user_id, req.path_params.at("id"));
    if (s.status != game::SessionStatus::active) {
      throw Error(ErrorCode::SessionComplete, "session '" + s.id + "' is already complete");
    }
    const auto sid = s.id;
    auto& rt = runtime(sid);
    rt.region.ingest_batch(batch);
    persist_region(sid);
    publish_gate_status(sid);
    json out{{"accepted", batch.size()}};
    if (const auto t = rt.region.last_event_ms()) out["clock_ms"] = *t;
    out["gate_unlocked"] = rt.gate_reported_unlocked;
    reply(res, 200, out);
  }));

  srv.Get("/sessions/:id/events", guarded([this, authenticate, owned_session, stream](
                                              const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    std::string sid;
    {
      std::lock_guard lock(mu_);
      sid = owned_session(user_id, req.path_params.at("id")).id;
    }
    stream("session:" + sid, res);
  }));

  srv.Get("/leaderboard", guarded([this](const auto& req, auto& res) {
    long long n = 10;
    if (req.has_param("n")) {
      try {
        n = std::stoll(req.get_param_value("n"));
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, "n must be an integer");
      }
    }
    if (n < 1) throw Error(ErrorCode::BadRequest, "n must be at least 1");
    std::lock_guard lock(mu_);
    json entries = json::array();
    for (const auto& e : engine_.leaderboard_top(static_cast<std::size_t>(n))) {
      entries.push_back(game::to_json(e));
    }
    reply(res, 200, {{"entries", std::move(entries)}});
  }));

  srv.Get("/leaderboard/events",
          guarded([stream](const auto&, auto& res) { stream("leaderboard", res); }));

  srv.Get("/users/:id/progress", guarded([this, authenticate, require_self](
                                             const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    require_self(user_id, req.path_params.at("id"));
    std::lock_guard lock(mu_);
    reply(res, 200,
          game::to_json(engine_.user_progress(user_id, req.get_param_value("lang"))));
  }));

  srv.Post("/users/:id/feedback", guarded([this, authenticate, require_self](
                                              const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    require_self(user_id, req.path_params.at("id"));
    const json body = object_body(req);
    const auto it = body.find("text");
    if (it == body.end() || !it->is_string()) {
      throw Error(ErrorCode::BadRequest, "field 'text' is required");
    }
    std::lock_guard lock(mu_);
    const auto& entry = engine_.record_feedback(user_id, it->template get<std::string>(), now());
    json out{{"text", entry.text}, {"at", entry.at}};
    persist_user(user_id);
    reply(res, 201, out);
  }));

  srv.Post("/easter-eggs/:id/trigger", guarded([this, authenticate](const auto& req, auto& res) {
    const auto user_id = authenticate(req);
    std::lock_guard lock(mu_);
    const auto result = engine_.trigger_easter_egg(user_id, req.path_params.at("id"), now());
    if (result.granted) {
      persist_user(user_id);
      publish_game_events(result.events);
    }
    reply(res, 200, {{"granted", result.granted},
                     {"already_found", !result.granted},
                     {"badge_id", result.badge_id},
                     {"points", result.points}});
  }));
}

}  // namespace marge::api
