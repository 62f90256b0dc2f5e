#include "marge/catalog.h"

#include <algorithm>
#include <fstream>
#include <set>

namespace marge::game {

using nlohmann::json;

std::string_view badge_kind_name(BadgeKind kind) noexcept {
  switch (kind) {
    case BadgeKind::adventure: return "adventure";
    case BadgeKind::perfect_quiz: return "perfect_quiz";
    case BadgeKind::easter_egg: return "easter_egg";
    case BadgeKind::usage: return "usage";
  }
  return "adventure";
}

std::string_view stage_type_name(const Stage& stage) noexcept {
  switch (stage.index()) {
    case 0: return "info";
    case 1: return "beacon_gate";
    case 2: return "quiz";
    default: return "numbered_steps";
  }
}

bool Catalog::has_language(std::string_view code) const {
  return std::find(languages.begin(), languages.end(), code) != languages.end();
}

const Adventure* Catalog::find_adventure(std::string_view id) const {
  for (const auto& a : adventures) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

const Badge* Catalog::find_badge(std::string_view id) const {
  for (const auto& b : badges) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const EasterEgg* Catalog::find_egg(std::string_view id) const {
  for (const auto& e : easter_eggs) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::size_t Catalog::available_count() const {
  return static_cast<std::size_t>(std::count_if(
      adventures.begin(), adventures.end(),
      [](const Adventure& a) { return a.available; }));
}

beacon::KindMap Catalog::beacon_kinds() const {
  beacon::KindMap kinds;
  for (const auto& a : adventures) {
    for (const auto& stage : a.stages) {
      if (const auto* gate = std::get_if<BeaconGateStage>(&stage)) {
        kinds[gate->beacon] = gate->kind;
      }
    }
  }
  return kinds;
}

namespace {

std::string join_messages(const std::vector<ValidationIssue>& issues) {
  std::string out = "catalog validation failed:";
  for (const auto& issue : issues) {
    out += "\n  " + (issue.path.empty() ? std::string("/") : issue.path) +
           ": " + issue.message;
  }
  return out;
}

// Walks the document once, collecting every issue instead of stopping at the
// first one.
class Loader {
 public:
  Catalog load(const json& doc) {
    Catalog cat;
    if (!doc.is_object()) {
      issue("", "catalog must be a JSON object");
      return cat;
    }
    load_languages(doc, cat);
    languages_ = cat.languages;

    if (doc.contains("points_per_level")) {
      cat.points_per_level = positive_int(doc["points_per_level"], "/points_per_level");
    }

    if (const json* badges = array_field(doc, "badges", "")) {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < badges->size(); ++i) {
        const auto path = "/badges/" + std::to_string(i);
        Badge b = load_badge((*badges)[i], path);
        if (!b.id.empty() && !seen.insert(b.id).second) {
          issue(path + "/id", "duplicate badge id '" + b.id + "'");
        }
        cat.badges.push_back(std::move(b));
      }
    }

    if (const json* eggs = array_field(doc, "easter_eggs", "")) {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < eggs->size(); ++i) {
        const auto path = "/easter_eggs/" + std::to_string(i);
        EasterEgg egg = load_egg((*eggs)[i], path, cat);
        if (!egg.id.empty() && !seen.insert(egg.id).second) {
          issue(path + "/id", "duplicate easter egg id '" + egg.id + "'");
        }
        cat.easter_eggs.push_back(std::move(egg));
      }
    }

    if (const json* advs = array_field(doc, "adventures", "")) {
      std::set<std::string> seen;
      for (std::size_t i = 0; i < advs->size(); ++i) {
        const auto path = "/adventures/" + std::to_string(i);
        Adventure a = load_adventure((*advs)[i], path, cat);
        if (!a.id.empty() && !seen.insert(a.id).second) {
          issue(path + "/id", "duplicate adventure id '" + a.id + "'");
        }
        cat.adventures.push_back(std::move(a));
      }
    }
    return cat;
  }

  std::vector<ValidationIssue> issues;

 private:
  void issue(std::string path, std::string message) {
    issues.push_back({std::move(path), std::move(message)});
  }

  const json* field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) {
      issue(path, "expected an object");
      return nullptr;
    }
    const auto it = obj.find(key);
    if (it == obj.end()) {
      issue(path + "/" + key, "required field missing");
      return nullptr;
    }
    return &*it;
  }

  const json* array_field(const json& obj, const char* key,
                          const std::string& path) {
    const json* f = field(obj, key, path);
    if (f && !f->is_array()) {
      issue(path + "/" + key, "expected an array");
      return nullptr;
    }
    return f;
  }

  std::string string_field(const json& obj, const char* key,
                           const std::string& path, bool required = true) {
    if (!required && (!obj.is_object() || !obj.contains(key))) return {};
    const json* f = field(obj, key, path);
    if (!f) return {};
    if (!f->is_string() || f->get<std::string>().empty()) {
      issue(path + "/" + key, "expected a non-empty string");
      return {};
    }
    return f->get<std::string>();
  }

  int positive_int(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() <= 0 ||
        v.get<long long>() > 1'000'000) {
      issue(path, "expected a positive integer");
      return 1;
    }
    return v.get<int>();
  }

  int optional_points(const json& obj, const char* key, const std::string& path,
                      int fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return positive_int(obj[key], path + "/" + key);
  }

  LocalizedText localized(const json& obj, const char* key,
                          const std::string& path) {
    const json* f = field(obj, key, path);
    if (!f) return {};
    return localized_value(*f, path + "/" + key);
  }

  LocalizedText localized_value(const json& v, const std::string& path) {
    LocalizedText text;
    if (!v.is_object()) {
      issue(path, "expected an object of language -> text");
      return text;
    }
    for (const auto& [lang, s] : v.items()) {
      if (!s.is_string()) {
        issue(path + "/" + lang, "expected a string");
        continue;
      }
      if (std::find(languages_.begin(), languages_.end(), lang) ==
          languages_.end()) {
        issue(path + "/" + lang, "language '" + lang + "' is not configured");
        continue;
      }
      text[lang] = s.get<std::string>();
    }
    for (const auto& lang : languages_) {
      if (!text.contains(lang) && v.contains(lang) == false) {
        issue(path + "/" + lang, "missing translation");
      }
    }
    return text;
  }

  void load_languages(const json& doc, Catalog& cat) {
    if (!doc.contains("languages")) {
      cat.languages = kDefaultLanguages;
      return;
    }
    const json& langs = doc["languages"];
    if (!langs.is_array()) {
      issue("/languages", "expected an array of language codes");
      cat.languages = kDefaultLanguages;
      return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < langs.size(); ++i) {
      const auto& l = langs[i];
      if (!l.is_string() || l.get<std::string>().empty()) {
        issue("/languages/" + std::to_string(i), "expected a language code");
        continue;
      }
      if (!seen.insert(l.get<std::string>()).second) {
        issue("/languages/" + std::to_string(i), "duplicate language code");
        continue;
      }
      cat.languages.push_back(l.get<std::string>());
    }
    if (langs.size() != kLanguageCount) {
      issue("/languages", "exactly 4 languages must be configured");
    }
  }

  Badge load_badge(const json& v, const std::string& path) {
    Badge b;
    b.id = string_field(v, "id", path);
    const auto kind = string_field(v, "kind", path);
    if (kind == "adventure") {
      b.kind = BadgeKind::adventure;
    } else if (kind == "perfect_quiz") {
      b.kind = BadgeKind::perfect_quiz;
    } else if (kind == "easter_egg") {
      b.kind = BadgeKind::easter_egg;
    } else if (kind == "usage") {
      b.kind = BadgeKind::usage;
    } else if (!kind.empty()) {
      issue(path + "/kind", "unknown badge kind '" + kind + "'");
    }
    b.name = localized(v, "name", path);
    b.hint = localized(v, "hint", path);
    return b;
  }

  void check_badge_ref(const Catalog& cat, const std::string& id,
                       BadgeKind kind, const std::string& path) {
    if (id.empty()) return;
    const Badge* b = cat.find_badge(id);
    if (!b) {
      issue(path, "badge '" + id + "' is not defined");
    } else if (b->kind != kind) {
      issue(path, "badge '" + id + "' must have kind " +
                      std::string(badge_kind_name(kind)));
    }
  }

  EasterEgg load_egg(const json& v, const std::string& path, const Catalog& cat) {
    EasterEgg egg;
    egg.id = string_field(v, "id", path);
    egg.badge_id = string_field(v, "badge_id", path);
    check_badge_ref(cat, egg.badge_id, BadgeKind::easter_egg, path + "/badge_id");
    egg.points = optional_points(v, "points", path, kDefaultEasterEggPoints);
    return egg;
  }

  Adventure load_adventure(const json& v, const std::string& path,
                           const Catalog& cat) {
    Adventure a;
    a.id = string_field(v, "id", path);
    if (const json* f = field(v, "available", path)) {
      if (f->is_boolean()) {
        a.available = f->get<bool>();
      } else {
        issue(path + "/available", "expected a boolean");
      }
    }
    a.award_id = string_field(v, "award_id", path);
    check_badge_ref(cat, a.award_id, BadgeKind::adventure, path + "/award_id");
    if (v.is_object() && v.contains("perfect_quiz_award_id")) {
      a.perfect_quiz_award_id = string_field(v, "perfect_quiz_award_id", path);
      check_badge_ref(cat, *a.perfect_quiz_award_id, BadgeKind::perfect_quiz,
                      path + "/perfect_quiz_award_id");
    }
    if (const json* lines = array_field(v, "bus_lines", path)) {
      for (std::size_t i = 0; i < lines->size(); ++i) {
        if ((*lines)[i].is_string()) {
          a.bus_lines.push_back((*lines)[i].get<std::string>());
        } else {
          issue(path + "/bus_lines/" + std::to_string(i), "expected a string");
        }
      }
    }
    a.image = string_field(v, "image", path);
    a.name = localized(v, "name", path);
    a.short_description = localized(v, "short_description", path);
    if (const json* d = field(v, "distance_km", path)) {
      if (d->is_number() && d->get<double>() >= 0.0) {
        a.distance_km = d->get<double>();
      } else {
        issue(path + "/distance_km", "expected a non-negative number");
      }
    }
    a.completion_points =
        optional_points(v, "completion_points", path, kDefaultCompletionPoints);
    if (const json* stages = array_field(v, "stages", path)) {
      if (stages->empty()) issue(path + "/stages", "an adventure needs stages");
      for (std::size_t i = 0; i < stages->size(); ++i) {
        a.stages.push_back(
            load_stage((*stages)[i], path + "/stages/" + std::to_string(i)));
      }
    }
    return a;
  }

  Stage load_stage(const json& v, const std::string& path) {
    const auto type = string_field(v, "type", path);
    if (type == "info") {
      InfoStage s;
      s.text = localized(v, "text", path);
      if (v.contains("images")) {
        if (v["images"].is_array()) {
          for (const auto& img : v["images"]) {
            if (img.is_string()) s.images.push_back(img.get<std::string>());
          }
        } else {
          issue(path + "/images", "expected an array");
        }
      }
      return s;
    }
    if (type == "beacon_gate") {
      BeaconGateStage s;
      s.text = localized(v, "text", path);
      if (const json* b = field(v, "beacon", path)) {
        const auto bpath = path + "/beacon";
        try {
          s.beacon.uuid = beacon::uuid_from_hex(b->at("uuid").get<std::string>());
          s.beacon.major = b->at("major").get<std::uint16_t>();
          s.beacon.minor = b->at("minor").get<std::uint16_t>();
          s.kind = beacon::kind_from_name(b->value("kind", "proximity"));
        } catch (const std::exception& e) {
          issue(bpath, std::string("invalid beacon identity: ") + e.what());
        }
      }
      if (v.contains("min_rssi")) {
        const auto& m = v["min_rssi"];
        if (m.is_number() && m.get<double>() >= -127.0 && m.get<double>() <= 0.0) {
          s.min_rssi = m.get<double>();
        } else {
          issue(path + "/min_rssi", "expected dBm in [-127, 0]");
        }
      }
      return s;
    }
    if (type == "quiz") {
      QuizStage s;
      if (const json* qs = array_field(v, "questions", path)) {
        if (qs->empty()) issue(path + "/questions", "a quiz needs at least one question");
        for (std::size_t i = 0; i < qs->size(); ++i) {
          s.questions.push_back(
              load_question((*qs)[i], path + "/questions/" + std::to_string(i)));
        }
      }
      return s;
    }
    if (type == "numbered_steps") {
      NumberedStepsStage s;
      if (const json* steps = array_field(v, "steps", path)) {
        if (steps->empty()) issue(path + "/steps", "expected at least one step");
        for (std::size_t i = 0; i < steps->size(); ++i) {
          s.steps.push_back(
              localized_value((*steps)[i], path + "/steps/" + std::to_string(i)));
        }
      }
      return s;
    }
    if (!type.empty()) issue(path + "/type", "unknown stage type '" + type + "'");
    return InfoStage{};
  }

  QuizQuestion load_question(const json& v, const std::string& path) {
    QuizQuestion q;
    q.text = localized(v, "text", path);
    if (const json* cs = array_field(v, "choices", path)) {
      if (cs->size() < 2) issue(path + "/choices", "expected at least 2 choices");
      for (std::size_t i = 0; i < cs->size(); ++i) {
        q.choices.push_back(
            localized_value((*cs)[i], path + "/choices/" + std::to_string(i)));
      }
    }
    if (const json* ci = field(v, "correct_index", path)) {
      if (ci->is_number_unsigned() && ci->get<std::size_t>() < q.choices.size()) {
        q.correct_index = ci->get<std::size_t>();
      } else {
        issue(path + "/correct_index", "must index one of the choices");
      }
    }
    q.points = optional_points(v, "points", path, kDefaultQuestionPoints);
    q.penalty = optional_points(v, "penalty", path, q.points);
    return q;
  }

  std::vector<std::string> languages_;
};

}  // namespace

CatalogValidationError::CatalogValidationError(std::vector<ValidationIssue> issues)
    : Error(ErrorCode::ValidationError, join_messages(issues)),
      issues_(std::move(issues)) {}

Catalog load_catalog(const json& document) {
  Loader loader;
  Catalog cat = loader.load(document);
  if (!loader.issues.empty()) throw CatalogValidationError(std::move(loader.issues));
  return cat;
}

Catalog load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CatalogValidationError({{"", "cannot open catalog file '" + path + "'"}});
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CatalogValidationError({{"", std::string("invalid JSON: ") + e.what()}});
  }
  return load_catalog(doc);
}

namespace {

const std::string& text_in(const LocalizedText& text, std::string_view lang) {
  static const std::string empty;
  const auto it = text.find(std::string(lang));
  return it == text.end() ? empty : it->second;
}

}  // namespace

std::vector<AdventureCard> list_adventures(const Catalog& catalog,
                                           std::string_view language) {
  if (!catalog.has_language(language)) {
    throw Error(ErrorCode::UnknownLanguage,
                "language '" + std::string(language) + "' is not configured");
  }
  std::vector<AdventureCard> cards;
  cards.reserve(catalog.adventures.size());
  for (const auto& a : catalog.adventures) {
    AdventureCard card;
    card.id = a.id;
    card.name = text_in(a.name, language);
    card.short_description = text_in(a.short_description, language);
    card.award_id = a.award_id;
    if (const Badge* b = catalog.find_badge(a.award_id)) {
      card.award_name = text_in(b->name, language);
    }
    card.image = a.image;
    card.bus_lines = a.bus_lines;
    card.distance_km = a.distance_km;
    card.stage_count = a.stages.size();
    card.available = a.available;
    card.alert = !a.available;
    cards.push_back(std::move(card));
  }
  return cards;
}

json to_json(const AdventureCard& card) {
  return {{"id", card.id},
          {"name", card.name},
          {"short_description", card.short_description},
          {"award", {{"id", card.award_id}, {"name", card.award_name}}},
          {"image", card.image},
          {"bus_lines", card.bus_lines},
          {"distance_km", card.distance_km},
          {"stage_count", card.stage_count},
          {"available", card.available},
          {"alert", card.alert}};
}

json stage_view(const Stage& stage, std::string_view lang) {
  json view{{"type", stage_type_name(stage)}};
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InfoStage>) {
          view["text"] = text_in(s.text, lang);
          view["images"] = s.images;
        } else if constexpr (std::is_same_v<T, BeaconGateStage>) {
          view["text"] = text_in(s.text, lang);
          view["beacon"] = {{"uuid", beacon::uuid_to_hex(s.beacon.uuid)},
                            {"major", s.beacon.major},
                            {"minor", s.beacon.minor},
                            {"kind", beacon::kind_name(s.kind)}};
          view["min_rssi"] = s.min_rssi;
        } else if constexpr (std::is_same_v<T, QuizStage>) {
          json questions = json::array();
          for (const auto& q : s.questions) {
            json choices = json::array();
            for (const auto& c : q.choices) choices.push_back(text_in(c, lang));
            questions.push_back({{"text", text_in(q.text, lang)},
                                 {"choices", std::move(choices)},
                                 {"points", q.points}});
          }
          view["questions"] = std::move(questions);
        } else {
          json steps = json::array();
          for (const auto& st : s.steps) steps.push_back(text_in(st, lang));
          view["steps"] = std::move(steps);
        }
      },
      stage);
  return view;
}

}  // namespace marge::game
