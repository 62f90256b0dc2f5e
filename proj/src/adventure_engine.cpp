#include "marge/adventure_engine.h"

#include <algorithm>
#include <limits>
#include <tuple>

#include "marge/error.h"

namespace marge::game {

using nlohmann::json;

std::string_view event_type_name(GameEvent::Type type) noexcept {
  switch (type) {
    case GameEvent::Type::stage_entered: return "stage_entered";
    case GameEvent::Type::score_changed: return "score_changed";
    case GameEvent::Type::points_awarded: return "points_awarded";
    case GameEvent::Type::badge_granted: return "badge_granted";
    case GameEvent::Type::session_completed: return "session_completed";
  }
  return "unknown";
}

std::string_view stage_input_name(StageInput input) noexcept {
  switch (input) {
    case StageInput::ack: return "ack";
    case StageInput::gate_request: return "gate";
    case StageInput::quiz_submit: return "quiz";
  }
  return "ack";
}

json to_json(const GameEvent& e) {
  json j{{"type", event_type_name(e.type)},
         {"user_id", e.user_id},
         {"at", e.at}};
  if (!e.session_id.empty()) j["session_id"] = e.session_id;
  switch (e.type) {
    case GameEvent::Type::stage_entered:
      j["stage_index"] = e.value;
      break;
    case GameEvent::Type::score_changed:
      j["score"] = e.value;
      j["delta"] = e.delta;
      j["question_index"] = e.index;
      j["correct"] = e.correct;
      break;
    case GameEvent::Type::points_awarded:
      j["total_points"] = e.value;
      j["points"] = e.delta;
      j["reason"] = e.detail;
      break;
    case GameEvent::Type::badge_granted:
      j["badge_id"] = e.detail;
      break;
    case GameEvent::Type::session_completed:
      j["score"] = e.value;
      break;
  }
  return j;
}

IdGenerator sequential_ids(std::string prefix) {
  auto counter = std::make_shared<std::uint64_t>(0);
  return [prefix = std::move(prefix), counter] {
    return prefix + std::to_string(++*counter);
  };
}

bool leaderboard_before(const LeaderboardEntry& a, const LeaderboardEntry& b) {
  if (a.total_points != b.total_points) return a.total_points > b.total_points;
  const auto never = std::numeric_limits<std::int64_t>::max();
  const auto ta = a.last_award_at.value_or(never);
  const auto tb = b.last_award_at.value_or(never);
  if (ta != tb) return ta < tb;
  return a.user_id < b.user_id;
}

int progress_percentage(std::size_t completed, std::size_t available) {
  if (available == 0) return 0;
  completed = std::min(completed, available);
  return static_cast<int>((200 * completed + available) / (2 * available));
}

AdventureEngine::AdventureEngine(std::shared_ptr<const Catalog> catalog,
                                 IdGenerator ids)
    : catalog_(std::move(catalog)), ids_(std::move(ids)) {}

const UserProfile& AdventureEngine::add_user(const std::string& user_id,
                                             const std::string& language) {
  if (user_id.empty()) throw Error(ErrorCode::BadRequest, "empty user id");
  if (!language.empty() && !catalog_->has_language(language)) {
    throw Error(ErrorCode::UnknownLanguage,
                "language '" + language + "' is not configured");
  }
  auto [it, inserted] = users_.try_emplace(user_id);
  if (inserted) {
    it->second.user_id = user_id;
    it->second.language = language;
  }
  return it->second;
}

const UserProfile& AdventureEngine::user(const std::string& user_id) const {
  const auto it = users_.find(user_id);
  if (it == users_.end()) {
    throw Error(ErrorCode::UnknownUser, "unknown user '" + user_id + "'");
  }
  return it->second;
}

bool AdventureEngine::has_user(const std::string& user_id) const {
  return users_.contains(user_id);
}

UserProfile& AdventureEngine::mutable_user(const std::string& user_id) {
  return const_cast<UserProfile&>(user(user_id));
}

void AdventureEngine::set_language(const std::string& user_id,
                                   const std::string& language) {
  if (!catalog_->has_language(language)) {
    throw Error(ErrorCode::UnknownLanguage,
                "language '" + language + "' is not configured");
  }
  mutable_user(user_id).language = language;
}

const Session& AdventureEngine::session(const std::string& session_id) const {
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  }
  return it->second;
}

Session& AdventureEngine::mutable_session(const std::string& session_id) {
  return const_cast<Session&>(session(session_id));
}

const Adventure& AdventureEngine::adventure_of(const Session& session) const {
  const Adventure* adv = catalog_->find_adventure(session.adventure_id);
  if (!adv) {
    throw Error(ErrorCode::UnknownAdventure,
                "adventure '" + session.adventure_id + "' left the catalog");
  }
  return *adv;
}

const Stage* AdventureEngine::current_stage(const Session& session) const {
  const Adventure& adv = adventure_of(session);
  return session.stage_index < adv.stages.size()
             ? &adv.stages[session.stage_index]
             : nullptr;
}

const Session* AdventureEngine::find_session(
    const std::string& user_id, const std::string& adventure_id) const {
  const auto it = latest_.find({user_id, adventure_id});
  return it == latest_.end() ? nullptr : &sessions_.at(it->second);
}

void AdventureEngine::require_active(const Session& session) const {
  if (session.status == SessionStatus::complete) {
    throw Error(ErrorCode::SessionComplete,
                "session '" + session.id + "' is already complete");
  }
}

StartResult AdventureEngine::start_session(const std::string& user_id,
                                           const std::string& adventure_id,
                                           std::int64_t now, bool replay) {
  const Adventure* adv = catalog_->find_adventure(adventure_id);
  if (!adv) {
    throw Error(ErrorCode::UnknownAdventure,
                "unknown adventure '" + adventure_id + "'");
  }
  if (!adv->available) {
    throw Error(ErrorCode::UnavailableAdventure,
                "adventure '" + adventure_id + "' is not available");
  }
  user(user_id);

  if (const Session* existing = find_session(user_id, adventure_id)) {
    if (existing->status == SessionStatus::active) {
      return {StartResult::Kind::resume_prompt, *existing};
    }
    if (!replay) return {StartResult::Kind::completed_prompt, *existing};
  }

  Session s;
  s.id = ids_();
  s.user_id = user_id;
  s.adventure_id = adventure_id;
  s.started_at = now;
  s.updated_at = now;
  latest_[{user_id, adventure_id}] = s.id;
  sessions_[s.id] = s;
  return {StartResult::Kind::new_session, std::move(s)};
}

const Session& AdventureEngine::resume_or_restart(const std::string& session_id,
                                                  ResumeChoice choice,
                                                  std::int64_t now) {
  Session& s = mutable_session(session_id);
  require_active(s);
  if (choice == ResumeChoice::restart) {
    s.stage_index = 0;
    s.score = 0;
    s.quiz_answers.clear();
    s.updated_at = now;
  }
  return s;
}

namespace {

StageInput expected_input(const Stage& stage) {
  switch (stage.index()) {
    case 1: return StageInput::gate_request;
    case 2: return StageInput::quiz_submit;
    default: return StageInput::ack;
  }
}

}  // namespace

AdvanceResult AdventureEngine::advance_stage(
    const std::string& session_id, StageInput input,
    const proximity::RegionState& region, std::int64_t region_now_ms,
    std::int64_t now) {
  Session& s = mutable_session(session_id);
  require_active(s);
  const Adventure& adv = adventure_of(s);
  const Stage& stage = adv.stages.at(s.stage_index);

  if (input != expected_input(stage)) {
    throw Error(ErrorCode::WrongInputKind,
                "stage " + std::to_string(s.stage_index) + " is " +
                    std::string(stage_type_name(stage)) + ", got input '" +
                    std::string(stage_input_name(input)) + "'");
  }
  if (const auto* gate = std::get_if<BeaconGateStage>(&stage)) {
    if (!region.gate_unlocked(gate->beacon, region_now_ms, gate->min_rssi)) {
      throw Error(ErrorCode::GateLocked,
                  "beacon " + beacon::to_string(gate->beacon) + " not in range");
    }
  }
  if (const auto* quiz = std::get_if<QuizStage>(&stage)) {
    const auto answered = std::count_if(
        s.quiz_answers.begin(), s.quiz_answers.end(),
        [&](const QuizAnswer& a) { return a.stage_index == s.stage_index; });
    if (static_cast<std::size_t>(answered) < quiz->questions.size()) {
      throw Error(ErrorCode::IncompleteQuiz,
                  std::to_string(quiz->questions.size() - answered) +
                      " question(s) unanswered");
    }
  }

  AdvanceResult result;
  ++s.stage_index;
  s.updated_at = now;
  if (s.stage_index < adv.stages.size()) {
    result.events.push_back({GameEvent::Type::stage_entered, s.user_id, s.id,
                             static_cast<std::int64_t>(s.stage_index), 0, 0,
                             false, {}, now});
  } else {
    complete(s, adv, now, result.events);
  }
  result.session = s;
  return result;
}

void AdventureEngine::award_points(UserProfile& u, std::int64_t points,
                                   const std::string& reason,
                                   const std::string& session_id,
                                   std::int64_t now,
                                   std::vector<GameEvent>& events) {
  u.total_points += points;
  u.last_award_at = now;
  events.push_back({GameEvent::Type::points_awarded, u.user_id, session_id,
                    u.total_points, points, 0, false, reason, now});
}

void AdventureEngine::grant_badge(UserProfile& u, const std::string& badge_id,
                                  const std::string& session_id,
                                  std::int64_t now,
                                  std::vector<GameEvent>& events) {
  if (!u.badges.try_emplace(badge_id, now).second) return;
  events.push_back({GameEvent::Type::badge_granted, u.user_id, session_id, 0, 0,
                    0, false, badge_id, now});
}

void AdventureEngine::complete(Session& s, const Adventure& adv,
                               std::int64_t now,
                               std::vector<GameEvent>& events) {
  s.status = SessionStatus::complete;
  s.stage_index = adv.stages.size();
  UserProfile& u = mutable_user(s.user_id);

  if (u.completed_adventures.insert(adv.id).second) {
    award_points(u, adv.completion_points + s.score, "adventure:" + adv.id, s.id,
                 now, events);
  }
  grant_badge(u, adv.award_id, s.id, now, events);

  const bool perfect =
      !s.quiz_answers.empty() &&
      std::all_of(s.quiz_answers.begin(), s.quiz_answers.end(),
                  [](const QuizAnswer& a) { return a.correct; });
  if (perfect && adv.perfect_quiz_award_id) {
    grant_badge(u, *adv.perfect_quiz_award_id, s.id, now, events);
  }
  events.push_back({GameEvent::Type::session_completed, s.user_id, s.id,
                    s.score, 0, 0, false, adv.id, now});
}

QuizOutcome AdventureEngine::answer_quiz(const std::string& session_id,
                                         std::size_t question_index,
                                         std::size_t choice_index,
                                         std::int64_t now) {
  Session& s = mutable_session(session_id);
  require_active(s);
  const Stage* stage = current_stage(s);
  const auto* quiz = stage ? std::get_if<QuizStage>(stage) : nullptr;
  if (!quiz) {
    throw Error(ErrorCode::NotAQuizStage,
                "stage " + std::to_string(s.stage_index) + " is not a quiz");
  }
  if (question_index >= quiz->questions.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "question index out of range");
  }
  const QuizQuestion& q = quiz->questions[question_index];
  if (choice_index >= q.choices.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "choice index out of range");
  }
  for (const auto& a : s.quiz_answers) {
    if (a.stage_index == s.stage_index && a.question_index == question_index) {
      throw Error(ErrorCode::AlreadyAnswered,
                  "question " + std::to_string(question_index) +
                      " was already answered");
    }
  }

  QuizOutcome out;
  out.correct = choice_index == q.correct_index;
  out.correct_index = q.correct_index;
  const std::int64_t before = s.score;
  s.score = out.correct ? before + q.points
                        : std::max<std::int64_t>(0, before - q.penalty);
  out.score_delta = s.score - before;
  out.new_score = s.score;
  s.quiz_answers.push_back({s.stage_index, question_index, choice_index, out.correct});
  s.updated_at = now;
  out.events.push_back({GameEvent::Type::score_changed, s.user_id, s.id, s.score,
                        out.score_delta, question_index, out.correct, {}, now});
  return out;
}

Progress AdventureEngine::user_progress(const std::string& user_id,
                                        std::string_view language) const {
  const UserProfile& u = user(user_id);
  std::string lang(language);
  if (lang.empty()) lang = u.language;
  if (lang.empty()) lang = catalog_->languages.front();
  if (!catalog_->has_language(lang)) {
    throw Error(ErrorCode::UnknownLanguage,
                "language '" + lang + "' is not configured");
  }

  Progress p;
  p.total_points = u.total_points;
  p.level = u.total_points / catalog_->points_per_level;
  p.available = catalog_->available_count();
  for (const auto& a : catalog_->adventures) {
    if (a.available && u.completed_adventures.contains(a.id)) ++p.completed;
  }
  p.percentage = progress_percentage(p.completed, p.available);
  for (const auto& b : catalog_->badges) {
    BadgeStatus st;
    st.id = b.id;
    st.kind = b.kind;
    st.name = b.name.at(lang);
    st.hint = b.hint.at(lang);
    if (const auto it = u.badges.find(b.id); it != u.badges.end()) {
      st.earned = true;
      st.granted_at = it->second;
    }
    p.badges.push_back(std::move(st));
  }
  return p;
}

std::vector<LeaderboardEntry> AdventureEngine::leaderboard_top(std::size_t n) const {
  std::vector<LeaderboardEntry> all;
  all.reserve(users_.size());
  for (const auto& [id, u] : users_) {
    all.push_back({id, u.total_points, u.last_award_at});
  }
  const auto count = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count),
                    all.end(), leaderboard_before);
  all.resize(count);
  return all;
}

EggResult AdventureEngine::trigger_easter_egg(const std::string& user_id,
                                              const std::string& egg_id,
                                              std::int64_t now) {
  const EasterEgg* egg = catalog_->find_egg(egg_id);
  if (!egg) throw Error(ErrorCode::UnknownEgg, "unknown easter egg '" + egg_id + "'");
  UserProfile& u = mutable_user(user_id);

  EggResult r;
  r.badge_id = egg->badge_id;
  if (u.badges.contains(egg->badge_id)) return r;
  r.granted = true;
  r.points = egg->points;
  grant_badge(u, egg->badge_id, {}, now, r.events);
  award_points(u, egg->points, "easter_egg:" + egg->id, {}, now, r.events);
  return r;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

std::size_t utf8_length(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

}  // namespace

const FeedbackEntry& AdventureEngine::record_feedback(const std::string& user_id,
                                                      const std::string& text,
                                                      std::int64_t now) {
  UserProfile& u = mutable_user(user_id);
  std::string trimmed = trim(text);
  if (trimmed.empty()) throw Error(ErrorCode::EmptyFeedback, "feedback is empty");
  if (utf8_length(trimmed) > kMaxFeedbackChars) {
    throw Error(ErrorCode::TooLong, "feedback exceeds 4000 characters");
  }
  u.feedback.push_back({std::move(trimmed), now});
  return u.feedback.back();
}

void AdventureEngine::restore_user(UserProfile profile) {
  const auto id = profile.user_id;
  users_[id] = std::move(profile);
}

void AdventureEngine::restore_session(Session session) {
  const auto key = std::make_pair(session.user_id, session.adventure_id);
  const auto it = latest_.find(key);
  if (it == latest_.end() ||
      std::tie(sessions_.at(it->second).started_at, it->second) <
          std::tie(session.started_at, session.id)) {
    latest_[key] = session.id;
  }
  const auto id = session.id;
  sessions_[id] = std::move(session);
}

json to_json(const Session& s) {
  json answers = json::array();
  for (const auto& a : s.quiz_answers) {
    answers.push_back({{"stage_index", a.stage_index},
                       {"question_index", a.question_index},
                       {"choice_index", a.choice_index},
                       {"correct", a.correct}});
  }
  return {{"session_id", s.id},
          {"user_id", s.user_id},
          {"adventure_id", s.adventure_id},
          {"stage_index", s.stage_index},
          {"quiz_answers", std::move(answers)},
          {"score", s.score},
          {"status", s.status == SessionStatus::complete ? "complete" : "active"},
          {"started_at", s.started_at},
          {"updated_at", s.updated_at}};
}

Session session_from_json(const json& j) {
  Session s;
  s.id = j.at("session_id").get<std::string>();
  s.user_id = j.at("user_id").get<std::string>();
  s.adventure_id = j.at("adventure_id").get<std::string>();
  s.stage_index = j.at("stage_index").get<std::size_t>();
  for (const auto& a : j.at("quiz_answers")) {
    s.quiz_answers.push_back({a.at("stage_index").get<std::size_t>(),
                              a.at("question_index").get<std::size_t>(),
                              a.at("choice_index").get<std::size_t>(),
                              a.at("correct").get<bool>()});
  }
  s.score = j.at("score").get<std::int64_t>();
  s.status = j.at("status").get<std::string>() == "complete"
                 ? SessionStatus::complete
                 : SessionStatus::active;
  s.started_at = j.at("started_at").get<std::int64_t>();
  s.updated_at = j.at("updated_at").get<std::int64_t>();
  return s;
}

json to_json(const UserProfile& u) {
  json feedback = json::array();
  for (const auto& f : u.feedback) {
    feedback.push_back({{"text", f.text}, {"at", f.at}});
  }
  json j{{"user_id", u.user_id},
         {"language", u.language},
         {"total_points", u.total_points},
         {"badges", u.badges},
         {"completed_adventures", u.completed_adventures},
         {"feedback", std::move(feedback)}};
  j["last_award_at"] = u.last_award_at ? json(*u.last_award_at) : json();
  return j;
}

UserProfile user_profile_from_json(const json& j) {
  UserProfile u;
  u.user_id = j.at("user_id").get<std::string>();
  u.language = j.value("language", "");
  u.total_points = j.at("total_points").get<std::int64_t>();
  u.badges = j.at("badges").get<std::map<std::string, std::int64_t>>();
  u.completed_adventures = j.at("completed_adventures").get<std::set<std::string>>();
  if (j.contains("last_award_at") && !j["last_award_at"].is_null()) {
    u.last_award_at = j["last_award_at"].get<std::int64_t>();
  }
  for (const auto& f : j.value("feedback", json::array())) {
    u.feedback.push_back({f.at("text").get<std::string>(), f.at("at").get<std::int64_t>()});
  }
  return u;
}

json to_json(const Progress& p) {
  json badges = json::array();
  for (const auto& b : p.badges) {
    json row{{"id", b.id},
             {"kind", badge_kind_name(b.kind)},
             {"name", b.name},
             {"hint", b.hint},
             {"earned", b.earned}};
    row["granted_at"] = b.granted_at ? json(*b.granted_at) : json();
    badges.push_back(std::move(row));
  }
  return {{"percentage", p.percentage},
          {"total_points", p.total_points},
          {"level", p.level},
          {"completed", p.completed},
          {"available", p.available},
          {"badges", std::move(badges)}};
}

json to_json(const LeaderboardEntry& e) {
  json j{{"user_id", e.user_id}, {"total_points", e.total_points}};
  j["last_award_at"] = e.last_award_at ? json(*e.last_award_at) : json();
  return j;
}

}  // namespace marge::game
