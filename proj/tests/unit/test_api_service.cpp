#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

#include "marge/beacon_protocol.h"
#include "marge/scan_log.h"
#include "oracles.h"
#include "service_harness.h"

using harness::Client;
using harness::Server;
using nlohmann::json;

namespace {

const char* kGateUuid = "b9407f30-f5f8-466e-aff9-25556b57fe6d";

json scan(std::int64_t t_ms, int rssi, int minor = 1, int major = 20) {
  return {{"t_ms", t_ms}, {"uuid", kGateUuid}, {"major", major}, {"minor", minor}, {"rssi", rssi}};
}

std::string start_monte(Client& c) {
  const auto r = c.post("/sessions", {{"adventure_id", "monte"}});
  REQUIRE(r.status == 201);
  return r.body["session"]["session_id"];
}

// Moves a fresh monte session onto its quiz stage.
void reach_quiz(Client& c, const std::string& sid) {
  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "ack"}}).status == 200);
  REQUIRE(c.post("/sessions/" + sid + "/scan-events",
                 json::array({scan(1000, -60), scan(2000, -62)}))
              .status == 200);
  const auto r = c.post("/sessions/" + sid + "/advance", {{"input", "gate"}});
  REQUIRE(r.status == 200);
  REQUIRE(r.body["stage"]["type"] == "quiz");
}

}  // namespace

TEST_CASE("every error code maps to a client-facing status") {
  for (auto code : marge::kAllErrorCodes) {
    const int status = marge::api::http_status(code);
    CHECK_MESSAGE(status >= 400, marge::error_name(code));
    CHECK_MESSAGE((status < 500 || status == 501), marge::error_name(code));
  }
  CHECK(marge::api::http_status(marge::ErrorCode::GateLocked) == 409);
  CHECK(marge::api::http_status(marge::ErrorCode::Unauthorized) == 401);
  CHECK(marge::api::http_status(marge::ErrorCode::Forbidden) == 403);
  CHECK(marge::api::http_status(marge::ErrorCode::UnknownSession) == 404);
  CHECK(marge::api::http_status(marge::ErrorCode::UnsupportedMediaType) == 415);
}

TEST_CASE("registration, login and authentication errors") {
  Server server;
  Client c(server.port());

  auto r = c.post("/auth/register", {{"login", "ana"}, {"password", "pw1"}});
  CHECK(r.status == 201);
  CHECK(r.body["user_id"].is_string());

  r = c.post("/auth/register", {{"login", "ana"}, {"password", "other"}});
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "DuplicateLogin");

  r = c.post("/auth/login", {{"login", "ana"}, {"password", "wrong"}});
  CHECK(r.status == 401);
  CHECK(r.body["code"] == "Unauthorized");

  r = c.post("/auth/login", {{"login", "ana"}, {"password", "pw1"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["token"].get<std::string>().size() == 64);

  r = c.post("/sessions", {{"adventure_id", "monte"}});
  CHECK(r.status == 401);

  c.token = "not-a-token";
  r = c.post("/sessions", {{"adventure_id", "monte"}});
  CHECK(r.status == 401);

  r = c.post("/auth/forgot-password", {{"login", "ana"}});
  CHECK(r.status == 501);
  CHECK(r.body["code"] == "NotImplemented");
}

TEST_CASE("request bodies are validated before any work") {
  Server server;
  Client c(server.port());
  c.sign_up("bruno");

  auto r = c.post_raw("/sessions", R"({"adventure_id":"monte"})", "text/plain");
  CHECK(r.status == 415);
  CHECK(r.body["code"] == "UnsupportedMediaType");

  r = c.post_raw("/sessions", "{not json", "application/json");
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "BadRequest");

  r = c.post("/sessions", json::object());
  CHECK(r.status == 400);

  r = c.post("/sessions", {{"adventure_id", "atlantis"}});
  CHECK(r.status == 404);
  CHECK(r.body["code"] == "UnknownAdventure");

  r = c.get("/leaderboard?n=0");
  CHECK(r.status == 400);
}

TEST_CASE("catalog is localized and unknown languages are rejected") {
  Server server;
  Client c(server.port());

  auto r = c.get("/catalog?lang=pt");
  REQUIRE(r.status == 200);
  REQUIRE(r.body["adventures"].size() == 2);
  CHECK(r.body["adventures"][0]["name"] == "Subida ao Monte");

  r = c.get("/catalog?lang=xx");
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "UnknownLanguage");

  r = c.get("/catalog/lido?lang=en");
  CHECK(r.status == 200);
  CHECK(r.body["id"] == "lido");

  c.sign_up("carla", "pw", "de");
  const auto sid = start_monte(c);
  r = c.get("/sessions/" + sid);
  CHECK(r.body["stage"]["text"].get<std::string>().rfind("Willkommen", 0) == 0);
}

TEST_CASE("sessions belong to their owner") {
  Server server;
  Client a(server.port()), b(server.port());
  const auto uid_a = a.sign_up("dora");
  b.sign_up("eva");
  const auto sid = start_monte(a);

  CHECK(b.get("/sessions/" + sid).status == 403);
  CHECK(b.post("/sessions/" + sid + "/advance", {{"input", "ack"}}).status == 403);
  CHECK(b.get("/users/" + uid_a + "/progress").status == 403);
  CHECK(b.get("/sessions/s0000").status == 404);
}

TEST_CASE("a locked gate refuses to advance") {
  Server server;
  Client c(server.port());
  c.sign_up("fabio");
  const auto sid = start_monte(c);
  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "ack"}}).status == 200);

  auto r = c.post("/sessions/" + sid + "/advance", {{"input", "gate"}});
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "GateLocked");

  // Weak signal only: still locked.
  r = c.post("/sessions/" + sid + "/scan-events", json::array({scan(1000, -99)}));
  CHECK(r.body["gate_unlocked"] == false);
  CHECK(c.post("/sessions/" + sid + "/advance", {{"input", "gate"}}).status == 409);

  // Wrong input kind for the stage.
  r = c.post("/sessions/" + sid + "/advance", {{"input", "ack"}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "WrongInputKind");
}

TEST_CASE("scan batches are all-or-nothing") {
  Server server;
  Client c(server.port());
  c.sign_up("gil");
  const auto sid = start_monte(c);
  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "ack"}}).status == 200);

  json batch = json::array();
  for (int i = 0; i < 5; ++i) batch.push_back(scan(1000 + i * 500, -70 - i, 9));
  auto r = c.post("/sessions/" + sid + "/scan-events", {{"events", batch}});
  REQUIRE(r.status == 200);
  CHECK(r.body["accepted"] == 5);
  CHECK(r.body["clock_ms"] == 3000);
  CHECK(r.body["gate_unlocked"] == false);

  // Last valid event is in range, but an earlier one regresses the clock.
  r = c.post("/sessions/" + sid + "/scan-events",
             json::array({scan(2500, -60), scan(9000, -60)}));
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "OutOfOrderEvent");
  CHECK(c.post("/sessions/" + sid + "/advance", {{"input", "gate"}}).status == 409);

  r = c.post("/sessions/" + sid + "/scan-events", json::array({scan(3500, -60)}));
  CHECK(r.body["clock_ms"] == 3500);
  CHECK(r.body["gate_unlocked"] == true);

  r = c.post("/sessions/" + sid + "/scan-events", json::array({{{"t_ms", 4000}}}));
  CHECK(r.status == 400);
}

TEST_CASE("answering and completing over HTTP") {
  Server server;
  Client c(server.port());
  const auto uid = c.sign_up("helena");
  const auto sid = start_monte(c);
  reach_quiz(c, sid);

  auto r = c.post("/sessions/" + sid + "/advance", {{"input", "quiz"}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "IncompleteQuiz");

  r = c.post("/sessions/" + sid + "/answer", {{"question_index", 0}, {"choice_index", 2}});
  REQUIRE(r.status == 200);
  CHECK(r.body["correct"] == false);
  CHECK(r.body["score"] == 0);
  CHECK(r.body["correct_index"] == 0);

  r = c.post("/sessions/" + sid + "/answer", {{"question_index", 0}, {"choice_index", 0}});
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "AlreadyAnswered");

  r = c.post("/sessions/" + sid + "/answer", {{"question_index", 7}, {"choice_index", 0}});
  CHECK(r.status == 400);

  r = c.post("/sessions/" + sid + "/answer", {{"question_index", 1}, {"choice_index", 1}});
  CHECK(r.body["correct"] == true);
  const int score = r.body["score"];
  CHECK(score > 0);
  CHECK_FALSE(r.body.contains("correct_index"));

  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "quiz"}}).status == 200);
  r = c.post("/sessions/" + sid + "/advance", {{"input", "ack"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["session"]["status"] == "complete");

  r = c.get("/users/" + uid + "/progress");
  REQUIRE(r.status == 200);
  CHECK(r.body["total_points"] == 100 + score);

  r = c.post("/sessions/" + sid + "/scan-events", json::array({scan(90000, -60)}));
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "SessionComplete");

  r = c.post("/sessions", {{"adventure_id", "monte"}});
  CHECK(r.status == 200);
  CHECK(r.body["result"] == "completed_prompt");

  r = c.get("/leaderboard");
  REQUIRE(r.body["entries"].size() == 1);
  CHECK(r.body["entries"][0]["user_id"] == uid);
}

TEST_CASE("event stream reports exactly the state changes") {
  Server server;
  Client c(server.port());
  c.sign_up("ines");
  const auto sid = start_monte(c);

  harness::EventReader stream(server.port(), "/sessions/" + sid + "/events", c.token);
  REQUIRE(stream.wait_connected());
  harness::EventReader board(server.port(), "/leaderboard/events", c.token);
  REQUIRE(board.wait_connected());

  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "ack"}}).status == 200);
  auto e = stream.next();
  REQUIRE(e);
  CHECK(e->type == "stage_entered");
  CHECK(e->data["stage_index"] == 1);

  // Reads and rejected writes are silent.
  c.get("/sessions/" + sid);
  c.post("/sessions/" + sid + "/advance", {{"input", "gate"}});
  c.post("/sessions/" + sid + "/scan-events", json::array({scan(500, -99)}));
  CHECK_FALSE(stream.next(std::chrono::milliseconds(600)));

  c.post("/sessions/" + sid + "/scan-events", json::array({scan(1000, -60)}));
  e = stream.next();
  REQUIRE(e);
  CHECK(e->type == "gate_status");
  CHECK(e->data["gate_unlocked"] == true);
  CHECK(e->data["beacon"].get<std::string>().find("/20/1") != std::string::npos);

  // Same state again: no repeat.
  c.post("/sessions/" + sid + "/scan-events", json::array({scan(1500, -61)}));
  CHECK_FALSE(stream.next(std::chrono::milliseconds(600)));

  REQUIRE(c.post("/sessions/" + sid + "/advance", {{"input", "gate"}}).status == 200);
  e = stream.next();
  REQUIRE(e);
  CHECK(e->type == "stage_entered");

  for (int q = 0; q < 2; ++q) {
    c.post("/sessions/" + sid + "/answer", {{"question_index", q}, {"choice_index", q}});
    e = stream.next();
    REQUIRE(e);
    CHECK(e->type == "score_changed");
    CHECK(e->data["question_index"] == q);
  }
  CHECK_FALSE(stream.next(std::chrono::milliseconds(600)));

  c.post("/sessions/" + sid + "/advance", {{"input", "quiz"}});
  c.post("/sessions/" + sid + "/advance", {{"input", "ack"}});
  std::vector<std::string> types;
  while (auto ev = stream.next(std::chrono::milliseconds(800))) types.push_back(ev->type);
  const std::vector<std::string> want{"stage_entered", "points_awarded", "badge_granted",
                                      "badge_granted", "session_completed"};
  CHECK(types == want);

  e = board.next();
  REQUIRE(e);
  CHECK(e->type == "leaderboard_changed");
  CHECK(e->data["entries"][0]["total_points"] == 120);
}

TEST_CASE("event streams need a token and a known session") {
  Server server;
  Client c(server.port());
  c.sign_up("joao");
  const auto sid = start_monte(c);
  harness::EventReader bad(server.port(), "/sessions/" + sid + "/events", "bogus");
  CHECK(bad.status() == 401);
  harness::EventReader missing(server.port(), "/sessions/nope/events", c.token);
  CHECK(missing.status() == 404);
  harness::EventReader query(server.port(), "/sessions/" + sid + "/events?token=" + c.token,
                             "");
  CHECK(query.wait_connected());
}

TEST_CASE("easter eggs pay once") {
  Server server;
  Client c(server.port());
  const auto uid = c.sign_up("karina");

  auto r = c.post("/easter-eggs/logo_tap/trigger", json::object());
  REQUIRE(r.status == 200);
  CHECK(r.body["granted"] == true);
  CHECK(r.body["points"] == 25);

  r = c.post("/easter-eggs/logo_tap/trigger", json::object());
  CHECK(r.body["granted"] == false);
  CHECK(r.body["already_found"] == true);

  CHECK(c.post("/easter-eggs/nope/trigger", json::object()).status == 404);
  CHECK(c.get("/users/" + uid + "/progress").body["total_points"] == 25);
}

TEST_CASE("feedback and language preference") {
  Server server;
  Client c(server.port());
  const auto uid = c.sign_up("luis");

  auto r = c.post("/users/" + uid + "/feedback", {{"text", "Great ride"}});
  CHECK(r.status == 201);
  r = c.post("/users/" + uid + "/feedback", {{"text", "   "}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "EmptyFeedback");

  CHECK(c.put("/users/" + uid + "/language", {{"language", "fr"}}).status == 200);
  CHECK(c.put("/users/" + uid + "/language", {{"language", "xx"}}).status == 400);
  const auto sid = start_monte(c);
  CHECK(c.get("/sessions/" + sid).body["stage"]["text"].get<std::string>().rfind("Bienvenue", 0) ==
        0);
}

TEST_CASE("state survives a restart on the same data directory") {
  oracle::TempDir dir;
  auto config = harness::test_config();
  config.store.data_dir = dir.path();

  std::string token, uid, sid;
  {
    Server server(config);
    Client c(server.port());
    uid = c.sign_up("marta");
    token = c.token;
    sid = start_monte(c);
    reach_quiz(c, sid);
    c.post("/sessions/" + sid + "/answer", {{"question_index", 0}, {"choice_index", 0}});
    c.post("/easter-eggs/logo_tap/trigger", json::object());
  }
  Server server(config);
  Client c(server.port());
  c.token = token;
  auto r = c.get("/sessions/" + sid);
  REQUIRE(r.status == 200);
  CHECK(r.body["session"]["stage_index"] == 2);
  CHECK(r.body["session"]["score"] == 10);
  CHECK(r.body["session"]["quiz_answers"].size() == 1);

  r = c.post("/sessions", {{"adventure_id", "monte"}});
  CHECK(r.body["result"] == "resume_prompt");

  r = c.get("/users/" + uid + "/progress");
  CHECK(r.body["total_points"] == 25);

  r = c.post("/sessions/" + sid + "/scan-events", json::array({scan(1500, -60)}));
  CHECK(r.status == 409);  // clock restored at 2000

  c.token.clear();
  r = c.post("/auth/login", {{"login", "marta"}, {"password", "pw"}});
  CHECK(r.status == 200);
}

TEST_CASE("concurrent players do not interfere") {
  Server server;
  constexpr int kPlayers = 8;
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int p = 0; p < kPlayers; ++p) {
    threads.emplace_back([&, p] {
      try {
        Client c(server.port());
        c.sign_up("player" + std::to_string(p));
        const auto sid = c.post("/sessions", {{"adventure_id", "lido"}})
                             .body["session"]["session_id"]
                             .get<std::string>();
        if (c.post("/sessions/" + sid + "/scan-events", json::array({scan(100, -80, 7, 1)}))
                .status != 200)
          ++failures;
        for (const auto* input : {"gate", "ack"}) {
          if (c.post("/sessions/" + sid + "/advance", {{"input", input}}).status != 200)
            ++failures;
        }
        c.post("/sessions/" + sid + "/answer", {{"question_index", 0}, {"choice_index", 0}});
        for (const auto* input : {"quiz", "ack"}) {
          if (c.post("/sessions/" + sid + "/advance", {{"input", input}}).status != 200)
            ++failures;
        }
      } catch (const std::exception&) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(failures == 0);
  Client c(server.port());
  const auto board = c.get("/leaderboard?n=20").body["entries"];
  REQUIRE(board.size() == kPlayers);
  std::set<std::string> users;
  for (const auto& e : board) {
    users.insert(e["user_id"].get<std::string>());
    CHECK(e["total_points"] == board[0]["total_points"]);
  }
  CHECK(users.size() == kPlayers);
}

TEST_CASE("garbage requests never produce a server error") {
  Server server;
  Client c(server.port());
  const auto uid = c.sign_up("nuno");
  const auto sid = start_monte(c);
  const std::vector<std::string> paths{
      "/auth/register", "/auth/login", "/sessions", "/sessions/" + sid + "/advance",
      "/sessions/" + sid + "/answer", "/sessions/" + sid + "/scan-events",
      "/sessions/" + sid + "/resume", "/users/" + uid + "/feedback",
      "/easter-eggs/logo_tap/trigger"};
  const std::vector<std::string> bodies{
      "", "null", "[]", "42", "\"x\"", "{}", R"({"input":7})", R"({"events":{}})",
      R"([{"t_ms":"a"}])", R"({"question_index":-1,"choice_index":1e99})",
      R"({"login":[],"password":{}})", R"({"choice":"maybe"})", R"({"text":5})"};
  for (const auto& path : paths) {
    for (const auto& body : bodies) {
      const auto r = c.post_raw(path, body, "application/json");
      CHECK_MESSAGE(r.status < 500, path << " " << body << " -> " << r.body.dump());
      if (r.status >= 400) {
        CHECK(r.body.contains("code"));
        CHECK(r.body.contains("message"));
      }
    }
  }
}
