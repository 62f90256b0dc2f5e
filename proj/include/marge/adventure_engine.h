#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marge/catalog.h"
#include "marge/proximity_engine.h"

namespace marge::game {

enum class SessionStatus { active, complete };

struct QuizAnswer {
  std::size_t stage_index = 0;
  std::size_t question_index = 0;
  std::size_t choice_index = 0;
  bool correct = false;
};

struct Session {
  std::string id;
  std::string user_id;
  std::string adventure_id;
  std::size_t stage_index = 0;  // == stage count once complete
  std::vector<QuizAnswer> quiz_answers;
  std::int64_t score = 0;
  SessionStatus status = SessionStatus::active;
  std::int64_t started_at = 0;
  std::int64_t updated_at = 0;
};

struct FeedbackEntry {
  std::string text;
  std::int64_t at = 0;
};

struct UserProfile {
  std::string user_id;
  std::string language;
  std::int64_t total_points = 0;
  std::map<std::string, std::int64_t> badges;  // id -> granted_at
  std::set<std::string> completed_adventures;
  std::optional<std::int64_t> last_award_at;
  std::vector<FeedbackEntry> feedback;
};

struct LeaderboardEntry {
  std::string user_id;
  std::int64_t total_points = 0;
  std::optional<std::int64_t> last_award_at;
};

// Something that happened to a session or user, in commit order.
struct GameEvent {
  enum class Type {
    stage_entered,      // value = new stage index
    score_changed,      // value = new session score, delta = change,
                        // index = question, correct = answer outcome
    points_awarded,     // value = new total, delta = points; detail = reason
    badge_granted,      // detail = badge id
    session_completed,  // value = final session score
  };
  Type type;
  std::string user_id;
  std::string session_id;  // empty for user-level events
  std::int64_t value = 0;
  std::int64_t delta = 0;
  std::size_t index = 0;
  bool correct = false;
  std::string detail;
  std::int64_t at = 0;
};

std::string_view event_type_name(GameEvent::Type type) noexcept;
nlohmann::json to_json(const GameEvent& event);

struct StartResult {
  enum class Kind { new_session, resume_prompt, completed_prompt };
  Kind kind;
  Session session;
};

enum class ResumeChoice { resume, restart };

// What the client submits to leave the current stage.
enum class StageInput { ack, gate_request, quiz_submit };

std::string_view stage_input_name(StageInput input) noexcept;

struct AdvanceResult {
  Session session;
  std::vector<GameEvent> events;
};

struct QuizOutcome {
  bool correct = false;
  std::size_t correct_index = 0;  // revealed on a wrong answer
  std::int64_t score_delta = 0;   // as applied, after the zero floor
  std::int64_t new_score = 0;
  std::vector<GameEvent> events;
};

struct BadgeStatus {
  std::string id;
  BadgeKind kind;
  std::string name;
  std::string hint;
  bool earned = false;
  std::optional<std::int64_t> granted_at;
};

struct Progress {
  int percentage = 0;
  std::int64_t total_points = 0;
  std::int64_t level = 0;
  std::size_t completed = 0;
  std::size_t available = 0;
  std::vector<BadgeStatus> badges;
};

struct EggResult {
  bool granted = false;  // false: already found
  std::string badge_id;
  int points = 0;
  std::vector<GameEvent> events;
};

using IdGenerator = std::function<std::string()>;

// Sequential ids ("s1", "s2", ...) for tests and single-process use.
IdGenerator sequential_ids(std::string prefix = "s");

inline constexpr std::size_t kMaxFeedbackChars = 4000;

// Gamification core. Not internally synchronized: callers serialize access.
class AdventureEngine {
 public:
  explicit AdventureEngine(std::shared_ptr<const Catalog> catalog,
                           IdGenerator ids = sequential_ids());

  const Catalog& catalog() const { return *catalog_; }

  // Idempotent: returns the existing profile if the user is known.
  const UserProfile& add_user(const std::string& user_id,
                              const std::string& language = {});
  // Throws Error{UnknownUser}.
  const UserProfile& user(const std::string& user_id) const;
  bool has_user(const std::string& user_id) const;
  // Throws Error{UnknownLanguage}, Error{UnknownUser}.
  void set_language(const std::string& user_id, const std::string& language);

  // `replay` starts a fresh run when the adventure was already completed
  // (the client accepted the completed prompt).
  StartResult start_session(const std::string& user_id,
                            const std::string& adventure_id, std::int64_t now,
                            bool replay = false);

  const Session& resume_or_restart(const std::string& session_id,
                                   ResumeChoice choice, std::int64_t now);

  // region/region_now_ms are consulted only for beacon gates.
  AdvanceResult advance_stage(const std::string& session_id, StageInput input,
                              const proximity::RegionState& region,
                              std::int64_t region_now_ms, std::int64_t now);

  QuizOutcome answer_quiz(const std::string& session_id,
                          std::size_t question_index, std::size_t choice_index,
                          std::int64_t now);

  Progress user_progress(const std::string& user_id,
                         std::string_view language = {}) const;

  std::vector<LeaderboardEntry> leaderboard_top(std::size_t n) const;

  EggResult trigger_easter_egg(const std::string& user_id,
                               const std::string& egg_id, std::int64_t now);

  const FeedbackEntry& record_feedback(const std::string& user_id,
                                       const std::string& text,
                                       std::int64_t now);

  // Throws Error{UnknownSession}.
  const Session& session(const std::string& session_id) const;
  const Stage* current_stage(const Session& session) const;

  // Latest session of a user for an adventure, if any.
  const Session* find_session(const std::string& user_id,
                              const std::string& adventure_id) const;

  const std::map<std::string, UserProfile>& users() const { return users_; }
  const std::map<std::string, Session>& sessions() const { return sessions_; }

  // Rehydration from persisted documents.
  void restore_user(UserProfile profile);
  void restore_session(Session session);

 private:
  Session& mutable_session(const std::string& session_id);
  UserProfile& mutable_user(const std::string& user_id);
  const Adventure& adventure_of(const Session& session) const;
  void require_active(const Session& session) const;
  void grant_badge(UserProfile& user, const std::string& badge_id,
                   const std::string& session_id, std::int64_t now,
                   std::vector<GameEvent>& events);
  void award_points(UserProfile& user, std::int64_t points,
                    const std::string& reason, const std::string& session_id,
                    std::int64_t now, std::vector<GameEvent>& events);
  void complete(Session& session, const Adventure& adventure, std::int64_t now,
                std::vector<GameEvent>& events);

  std::shared_ptr<const Catalog> catalog_;
  IdGenerator ids_;
  std::map<std::string, UserProfile> users_;
  std::map<std::string, Session> sessions_;
  // (user, adventure) -> latest session id
  std::map<std::pair<std::string, std::string>, std::string> latest_;
};

// Deterministic total order: points desc, last award asc (never awarded
// sorts last), user id asc.
bool leaderboard_before(const LeaderboardEntry& a, const LeaderboardEntry& b);

// Half-up rounded 100 * completed / available; 0 when nothing is available.
int progress_percentage(std::size_t completed, std::size_t available);

nlohmann::json to_json(const Session& session);
Session session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const UserProfile& profile);
UserProfile user_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Progress& progress);
nlohmann::json to_json(const LeaderboardEntry& entry);

}  // namespace marge::game
