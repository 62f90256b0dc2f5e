#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "marge/beacon_protocol.h"
#include "marge/error.h"

namespace marge::game {

// Language code -> text. A loaded catalog has an entry for every configured
// language.
using LocalizedText = std::map<std::string, std::string>;

inline const std::vector<std::string> kDefaultLanguages{"en", "pt", "de", "fr"};
inline constexpr std::size_t kLanguageCount = 4;

inline constexpr int kDefaultQuestionPoints = 10;
inline constexpr int kDefaultCompletionPoints = 100;
inline constexpr int kDefaultEasterEggPoints = 25;
inline constexpr int kDefaultPointsPerLevel = 500;

enum class BadgeKind { adventure, perfect_quiz, easter_egg, usage };

std::string_view badge_kind_name(BadgeKind kind) noexcept;

struct Badge {
  std::string id;
  BadgeKind kind = BadgeKind::adventure;
  LocalizedText name;
  LocalizedText hint;
};

struct QuizQuestion {
  LocalizedText text;
  std::vector<LocalizedText> choices;
  std::size_t correct_index = 0;
  int points = kDefaultQuestionPoints;
  int penalty = kDefaultQuestionPoints;  // subtracted on a wrong answer
};

struct InfoStage {
  LocalizedText text;
  std::vector<std::string> images;
};

struct BeaconGateStage {
  beacon::BeaconId beacon;
  beacon::BeaconKind kind = beacon::BeaconKind::proximity;
  double min_rssi = -90.0;
  LocalizedText text;
};

struct QuizStage {
  std::vector<QuizQuestion> questions;
};

struct NumberedStepsStage {
  std::vector<LocalizedText> steps;
};

using Stage =
    std::variant<InfoStage, BeaconGateStage, QuizStage, NumberedStepsStage>;

std::string_view stage_type_name(const Stage& stage) noexcept;

struct Adventure {
  std::string id;
  bool available = true;
  std::string award_id;
  std::optional<std::string> perfect_quiz_award_id;
  std::vector<std::string> bus_lines;
  std::string image;
  LocalizedText name;
  LocalizedText short_description;
  double distance_km = 0.0;
  int completion_points = kDefaultCompletionPoints;
  std::vector<Stage> stages;
};

struct EasterEgg {
  std::string id;
  std::string badge_id;
  int points = kDefaultEasterEggPoints;
};

class Catalog {
 public:
  std::vector<std::string> languages;
  std::vector<Badge> badges;
  std::vector<EasterEgg> easter_eggs;
  std::vector<Adventure> adventures;
  int points_per_level = kDefaultPointsPerLevel;

  bool has_language(std::string_view code) const;
  const Adventure* find_adventure(std::string_view id) const;
  const Badge* find_badge(std::string_view id) const;
  const EasterEgg* find_egg(std::string_view id) const;
  std::size_t available_count() const;

  // Gate beacons and their hardware class, for presence TTLs.
  beacon::KindMap beacon_kinds() const;
};

struct ValidationIssue {
  std::string path;  // JSON pointer into the catalog document
  std::string message;
};

class CatalogValidationError : public Error {
 public:
  explicit CatalogValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Throws CatalogValidationError listing every offending field.
Catalog load_catalog(const nlohmann::json& document);
Catalog load_catalog_file(const std::string& path);

struct AdventureCard {
  std::string id;
  std::string name;
  std::string short_description;
  std::string award_id;
  std::string award_name;
  std::string image;
  std::vector<std::string> bus_lines;
  double distance_km = 0.0;
  std::size_t stage_count = 0;
  bool available = true;
  bool alert = false;  // shown with an "unavailable" alert in the selector
};

// Throws Error{UnknownLanguage}.
std::vector<AdventureCard> list_adventures(const Catalog& catalog,
                                           std::string_view language);

nlohmann::json to_json(const AdventureCard& card);

// Localized view of one stage, as shown to a player.
nlohmann::json stage_view(const Stage& stage, std::string_view language);

}  // namespace marge::game
