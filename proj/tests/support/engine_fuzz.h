#pragma once

// Randomized playthroughs over a catalog, checking the engine invariants
// after every operation. Shared by the unit tests and the acceptance run.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "marge/adventure_engine.h"
#include "marge/error.h"
#include "marge/proximity_engine.h"

namespace fuzz {

using namespace marge;
using namespace marge::game;

struct Report {
  int playthroughs = 0;
  int completions = 0;
  int gates_passed = 0;
  int wrong_answers = 0;
  std::vector<std::string> violations;
};

inline Report run_engine_fuzz(std::shared_ptr<const Catalog> catalog, int playthroughs,
                              std::uint64_t seed) {
  Report report;
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  auto chance = [&](int percent) { return static_cast<int>(rng() % 100) < percent; };
  auto violate = [&](std::string what) {
    if (report.violations.size() < 20) report.violations.push_back(std::move(what));
  };

  AdventureEngine engine(catalog);
  const std::vector<std::string> users{"ana", "bruno", "carla", "duarte", "eva"};
  for (const auto& u : users) engine.add_user(u);

  // Event-log replay state.
  std::map<std::string, std::int64_t> awarded;
  std::map<std::pair<std::string, std::string>, int> badge_grants;
  std::map<std::pair<std::string, std::string>, int> adventure_awards;

  std::map<std::string, proximity::RegionState> regions;
  std::map<std::string, std::set<beacon::BeaconId>> ever_seen;
  std::int64_t clock = 0;
  std::int64_t scan_clock = 0;

  std::vector<beacon::BeaconId> beacons;
  for (const auto& [id, kind] : catalog->beacon_kinds()) beacons.push_back(id);
  beacons.push_back({beacon::uuid_from_hex("00000000000000000000000000000001"), 9, 9});

  proximity::EngineConfig region_config;
  region_config.kinds = catalog->beacon_kinds();

  auto replay_events = [&](const std::vector<GameEvent>& events) {
    std::int64_t completion_delta = -1;
    for (const auto& e : events) {
      if (e.type == GameEvent::Type::points_awarded) {
        awarded[e.user_id] += e.delta;
        if (awarded[e.user_id] != e.value) violate("points_awarded total mismatch");
        if (e.detail.rfind("adventure:", 0) == 0) {
          if (++adventure_awards[{e.user_id, e.detail}] > 1) {
            violate("completion points granted twice for " + e.detail);
          }
          completion_delta = e.delta;
        }
      } else if (e.type == GameEvent::Type::badge_granted) {
        if (++badge_grants[{e.user_id, e.detail}] > 1) {
          violate("badge " + e.detail + " granted twice to " + e.user_id);
        }
      } else if (e.type == GameEvent::Type::session_completed) {
        const auto* adv = catalog->find_adventure(e.detail);
        if (completion_delta >= 0 && completion_delta != adv->completion_points + e.value) {
          violate("completion award differs from completion_points + score");
        }
      }
    }
  };

  for (int p = 0; p < playthroughs; ++p) {
    ++report.playthroughs;
    const auto& user = users[pick(users.size())];
    const auto& adv = catalog->adventures[pick(catalog->adventures.size())];
    clock += 1000;

    StartResult start;
    try {
      start = engine.start_session(user, adv.id, clock, chance(50));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnavailableAdventure) violate("start: " + std::string(e.what()));
      continue;
    }
    if (start.kind == StartResult::Kind::completed_prompt) continue;
    const std::string sid = start.session.id;
    if (start.kind == StartResult::Kind::resume_prompt && chance(30)) {
      engine.resume_or_restart(sid, ResumeChoice::restart, clock);
    }
    if (start.kind == StartResult::Kind::new_session) {
      regions.erase(sid);
      ever_seen.erase(sid);
    }
    auto& region = regions.try_emplace(sid, region_config).first->second;

    std::size_t last_stage = engine.session(sid).stage_index;
    for (int step = 0; step < 40; ++step) {
      clock += 1000;
      const auto op = pick(100);
      try {
        if (op < 25) {
          // Scan activity, sometimes from unrelated beacons.
          scan_clock = std::max(scan_clock, region.last_event_ms().value_or(0));
          scan_clock += static_cast<std::int64_t>(pick(40000));
          const auto& id = beacons[pick(beacons.size())];
          const int rssi = -40 - static_cast<int>(pick(80));
          region.ingest({id, rssi, scan_clock});
          ever_seen[sid].insert(id);
        } else if (op < 55) {
          const auto& s = engine.session(sid);
          const Stage* stage = engine.current_stage(s);
          StageInput input = StageInput::ack;
          if (stage && chance(85)) {
            if (std::holds_alternative<BeaconGateStage>(*stage)) input = StageInput::gate_request;
            if (std::holds_alternative<QuizStage>(*stage)) input = StageInput::quiz_submit;
          } else {
            input = static_cast<StageInput>(pick(3));
          }
          const bool at_gate = stage && std::holds_alternative<BeaconGateStage>(*stage);
          const auto gate_beacon = at_gate ? std::get<BeaconGateStage>(*stage).beacon
                                           : beacon::BeaconId{};
          const auto region_now = std::max(scan_clock, region.last_event_ms().value_or(0)) +
                                  static_cast<std::int64_t>(pick(5000));
          const auto result = engine.advance_stage(sid, input, region, region_now, clock);
          if (at_gate) {
            ++report.gates_passed;
            if (!ever_seen[sid].contains(gate_beacon)) violate("gate passed without its beacon");
            if (!region.is_present(gate_beacon, region_now)) violate("gate passed while absent");
          }
          replay_events(result.events);
          if (result.session.status == SessionStatus::complete) {
            ++report.completions;
            bool perfect = !result.session.quiz_answers.empty();
            for (const auto& a : result.session.quiz_answers) perfect = perfect && a.correct;
            for (const auto& e : result.events) {
              if (e.type == GameEvent::Type::badge_granted && adv.perfect_quiz_award_id &&
                  e.detail == *adv.perfect_quiz_award_id && !perfect) {
                violate("perfect-quiz badge for an imperfect run");
              }
            }
          }
        } else if (op < 90) {
          const auto& s = engine.session(sid);
          const Stage* stage = engine.current_stage(s);
          std::size_t questions = 3;
          if (stage && std::holds_alternative<QuizStage>(*stage)) {
            questions = std::get<QuizStage>(*stage).questions.size();
          }
          const auto before = s.score;
          const auto out = engine.answer_quiz(sid, pick(questions + 1), pick(4), clock);
          if (!out.correct) ++report.wrong_answers;
          if (out.new_score != std::max<std::int64_t>(0, before + out.score_delta)) {
            violate("score arithmetic");
          }
          if (out.events.size() != 1) violate("answer must emit exactly one event");
          replay_events(out.events);
        } else if (op < 95) {
          const auto& egg = catalog->easter_eggs[pick(catalog->easter_eggs.size())];
          replay_events(engine.trigger_easter_egg(user, egg.id, clock).events);
        } else {
          engine.resume_or_restart(sid, ResumeChoice::resume, clock);
        }
      } catch (const Error& e) {
        switch (e.code()) {
          case ErrorCode::GateLocked:
          case ErrorCode::WrongInputKind:
          case ErrorCode::IncompleteQuiz:
          case ErrorCode::SessionComplete:
          case ErrorCode::NotAQuizStage:
          case ErrorCode::AlreadyAnswered:
          case ErrorCode::IndexOutOfRange:
          case ErrorCode::OutOfOrderEvent:
            break;
          default:
            violate(std::string("unexpected error: ") + e.what());
        }
      }

      const auto& s = engine.session(sid);
      if (s.score < 0) violate("negative score");
      if (s.stage_index < last_stage) violate("stage index decreased");
      last_stage = s.stage_index;
      const bool past_end = s.stage_index == adv.stages.size();
      if ((s.status == SessionStatus::complete) != past_end) violate("status/stage mismatch");
      if (s.status == SessionStatus::complete) break;
    }
  }

  for (const auto& u : users) {
    const auto& profile = engine.user(u);
    if (profile.total_points != awarded[u]) violate("points conservation for " + u);
    for (const auto& [badge, at] : profile.badges) {
      if (badge_grants[{u, badge}] != 1) violate("badge without exactly one grant");
    }
  }

  const auto board = engine.leaderboard_top(users.size());
  for (std::size_t i = 1; i < board.size(); ++i) {
    if (!leaderboard_before(board[i - 1], board[i])) violate("leaderboard not strictly ordered");
  }
  return report;
}

}  // namespace fuzz
