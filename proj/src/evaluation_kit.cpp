#include "marge/evaluation_kit.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "marge/error.h"

namespace marge::eval {

double sus_score(std::span<const int> items) {
  if (items.size() != kSusItems) {
    throw Error(ErrorCode::InvalidResponse,
                "SUS response needs 10 items, got " + std::to_string(items.size()));
  }
  int sum = 0;
  for (std::size_t i = 0; i < kSusItems; ++i) {
    const int v = items[i];
    if (v < 1 || v > 5) {
      throw Error(ErrorCode::InvalidResponse,
                  "SUS item " + std::to_string(i + 1) + " = " + std::to_string(v) +
                      " outside [1, 5]");
    }
    // Item numbering is 1-based: items 1, 3, 5, ... are positively worded.
    sum += (i % 2 == 0) ? v - 1 : 5 - v;
  }
  return sum * 2.5;
}

const SusBands& default_sus_bands() {
  static const SusBands bands = [] {
    SusBands b;
    b.grades = {{0.0, "F", 0, 14},     {51.7, "D", 15, 34},  {62.7, "C-", 35, 40},
                {65.0, "C", 41, 59},   {71.1, "C+", 60, 64}, {72.6, "B-", 65, 69},
                {74.1, "B", 70, 79},   {77.2, "B+", 80, 84}, {78.9, "A-", 85, 89},
                {80.8, "A", 90, 95},   {84.1, "A+", 96, 100}};
    b.acceptability = {{0.0, "Not Acceptable"}, {50.0, "Marginal"}, {70.0, "Acceptable"}};
    b.nps = {{0.0, "Detractor"}, {62.7, "Passive"}, {78.9, "Promoter"}};
    b.adjective = {{0.0, "Worst Imaginable"}, {20.3, "Awful"},
                   {35.7, "Poor"},            {50.9, "OK"},
                   {71.4, "Good"},            {80.8, "Good–Excellent border"},
                   {85.5, "Excellent"},       {90.9, "Best Imaginable"}};
    b.average_score = 68.0;
    return b;
  }();
  return bands;
}

namespace {

template <typename Band>
void check_table(const std::vector<Band>& table, const char* name) {
  if (table.empty() || table.front().min_score != 0.0) {
    throw Error(ErrorCode::InvalidConfig,
                std::string("SUS band table '") + name + "' must start at 0");
  }
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (!(table[i].min_score > table[i - 1].min_score)) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string("SUS band table '") + name + "' must be ascending");
    }
  }
}

std::vector<LabelBand> labels_from_json(const nlohmann::json& j) {
  std::vector<LabelBand> out;
  for (const auto& row : j) {
    out.push_back({row.at("min").get<double>(), row.at("label").get<std::string>()});
  }
  return out;
}

nlohmann::json labels_to_json(const std::vector<LabelBand>& table) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& b : table) out.push_back({{"min", b.min_score}, {"label", b.label}});
  return out;
}

template <typename Band>
const Band& lookup(const std::vector<Band>& table, double score) {
  const auto it = std::upper_bound(
      table.begin(), table.end(), score,
      [](double s, const Band& b) { return s < b.min_score; });
  return *std::prev(it);
}

}  // namespace

SusBands sus_bands_from_json(const nlohmann::json& j) {
  try {
    SusBands b;
    for (const auto& row : j.at("grades")) {
      b.grades.push_back({row.at("min").get<double>(), row.at("grade").get<std::string>(),
                          row.at("percentile").at(0).get<int>(),
                          row.at("percentile").at(1).get<int>()});
    }
    b.acceptability = labels_from_json(j.at("acceptability"));
    b.nps = labels_from_json(j.at("nps"));
    b.adjective = labels_from_json(j.at("adjective"));
    b.average_score = j.value("average_score", 68.0);
    check_table(b.grades, "grades");
    check_table(b.acceptability, "acceptability");
    check_table(b.nps, "nps");
    check_table(b.adjective, "adjective");
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("SUS band table: ") + e.what());
  }
}

nlohmann::json to_json(const SusBands& bands) {
  nlohmann::json grades = nlohmann::json::array();
  for (const auto& g : bands.grades) {
    grades.push_back({{"min", g.min_score},
                      {"grade", g.grade},
                      {"percentile", {g.percentile_lo, g.percentile_hi}}});
  }
  return {{"average_score", bands.average_score},
          {"grades", std::move(grades)},
          {"acceptability", labels_to_json(bands.acceptability)},
          {"nps", labels_to_json(bands.nps)},
          {"adjective", labels_to_json(bands.adjective)}};
}

SusInterpretation sus_interpret(double mean_score, const SusBands& bands) {
  if (!(mean_score >= 0.0 && mean_score <= 100.0)) {
    throw Error(ErrorCode::OutOfRange, "SUS score must be within [0, 100]");
  }
  SusInterpretation out;
  out.score = mean_score;
  const auto& grade = lookup(bands.grades, mean_score);
  out.letter_grade = grade.grade;
  out.percentile_lo = grade.percentile_lo;
  out.percentile_hi = grade.percentile_hi;
  out.percentile_band =
      mean_score < bands.average_score ? "below average" : "above average";
  out.acceptability = lookup(bands.acceptability, mean_score).label;
  out.nps_category = lookup(bands.nps, mean_score).label;
  out.adjective = lookup(bands.adjective, mean_score).label;
  return out;
}

SusSummary summarize_sus(std::span<const SusResponse> responses,
                         const SusBands& bands) {
  if (responses.empty()) throw Error(ErrorCode::EmptyInput, "no SUS responses");
  SusSummary s;
  double sum = 0.0;
  for (const auto& r : responses) {
    s.scores.push_back(sus_score(r));
    sum += s.scores.back();
  }
  s.mean = sum / static_cast<double>(responses.size());
  s.interpretation = sus_interpret(s.mean, bands);
  return s;
}

namespace {

// Welford's running mean / M2.
struct Running {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sample_sd() const {
    return n < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(n - 1));
  }
};

}  // namespace

TaskMetrics task_metrics(std::span<const TaskSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no task samples");
  TaskMetrics m;
  m.task_id = samples.front().task_id;
  m.n = samples.size();
  m.min_s = samples.front().duration_s;
  m.max_s = samples.front().duration_s;
  Running duration;
  Running errors;
  for (const auto& s : samples) {
    if (!std::isfinite(s.duration_s) || s.duration_s < 0.0 ||
        !std::isfinite(s.errors) || s.errors < 0.0) {
      throw Error(ErrorCode::InvalidResponse,
                  "task samples must be finite and non-negative");
    }
    duration.add(s.duration_s);
    errors.add(s.errors);
    m.min_s = std::min(m.min_s, s.duration_s);
    m.max_s = std::max(m.max_s, s.duration_s);
  }
  m.mean_s = duration.mean;
  m.sd_s = duration.sample_sd();
  m.mean_errors = errors.mean;
  m.sd_errors = errors.sample_sd();
  return m;
}

std::vector<TaskMetrics> task_metrics_by_task(std::span<const TaskSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no task samples");
  std::vector<std::string> order;
  std::map<std::string, std::vector<TaskSample>> groups;
  for (const auto& s : samples) {
    auto [it, inserted] = groups.try_emplace(s.task_id);
    if (inserted) order.push_back(s.task_id);
    it->second.push_back(s);
  }
  std::vector<TaskMetrics> out;
  for (const auto& id : order) out.push_back(task_metrics(groups[id]));
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_int(const std::string& s, int& out) {
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::InvalidResponse,
              "line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

std::vector<SusResponse> read_sus_csv(std::istream& in) {
  std::vector<SusResponse> out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_csv_line(line);
    int probe = 0;
    if (first && !cells.empty() && !parse_int(cells[0], probe)) {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != kSusItems) {
      bad_line(line_no, "expected 10 item columns, got " + std::to_string(cells.size()));
    }
    SusResponse r{};
    for (std::size_t i = 0; i < kSusItems; ++i) {
      if (!parse_int(cells[i], r[i]) || r[i] < 1 || r[i] > 5) {
        bad_line(line_no, "item " + std::to_string(i + 1) + " must be an integer in [1, 5]");
      }
    }
    out.push_back(r);
  }
  return out;
}

std::vector<TaskSample> read_task_csv(std::istream& in) {
  std::vector<TaskSample> out;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split_csv_line(line);
    double probe = 0.0;
    if (first && cells.size() >= 2 && !parse_double(cells[1], probe)) {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 3) bad_line(line_no, "expected task_id,duration_s,errors");
    TaskSample s;
    s.task_id = cells[0];
    if (s.task_id.empty()) bad_line(line_no, "empty task_id");
    if (!parse_double(cells[1], s.duration_s) || !std::isfinite(s.duration_s) ||
        s.duration_s < 0.0) {
      bad_line(line_no, "duration_s must be a non-negative number");
    }
    if (!parse_double(cells[2], s.errors) || !std::isfinite(s.errors) || s.errors < 0.0) {
      bad_line(line_no, "errors must be a non-negative number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::ordered_json to_json(const SusInterpretation& i) {
  nlohmann::ordered_json j;
  j["mean_score"] = i.score;
  j["letter_grade"] = i.letter_grade;
  j["percentile_range"] = {i.percentile_lo, i.percentile_hi};
  j["percentile_band"] = i.percentile_band;
  j["acceptability"] = i.acceptability;
  j["nps_category"] = i.nps_category;
  j["adjective"] = i.adjective;
  return j;
}

nlohmann::ordered_json to_json(const SusSummary& s) {
  nlohmann::ordered_json j;
  j["respondents"] = s.scores.size();
  j["scores"] = s.scores;
  j["mean_score"] = s.mean;
  j["interpretation"] = to_json(s.interpretation);
  return j;
}

nlohmann::ordered_json to_json(const TaskMetrics& m) {
  nlohmann::ordered_json j;
  j["task_id"] = m.task_id;
  j["n"] = m.n;
  j["mean_s"] = m.mean_s;
  j["sd_s"] = m.sd_s;
  j["min_s"] = m.min_s;
  j["max_s"] = m.max_s;
  j["mean_errors"] = m.mean_errors;
  j["sd_errors"] = m.sd_errors;
  return j;
}

std::string format_sus_table(const SusSummary& s) {
  std::string out;
  char buf[128];
  out += "respondent  score\n";
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%10zu  %5.1f\n", i + 1, s.scores[i]);
    out += buf;
  }
  const auto& in = s.interpretation;
  std::snprintf(buf, sizeof buf, "mean        %5.2f\n", s.mean);
  out += buf;
  std::snprintf(buf, sizeof buf, "grade       %s (percentile %d-%d, %s)\n",
                in.letter_grade.c_str(), in.percentile_lo, in.percentile_hi,
                in.percentile_band.c_str());
  out += buf;
  out += "acceptable  " + in.acceptability + "\n";
  out += "nps         " + in.nps_category + "\n";
  out += "adjective   " + in.adjective + "\n";
  return out;
}

std::string format_task_table(const std::vector<TaskMetrics>& metrics) {
  std::string out = "task        n    mean_s    sd_s   min_s   max_s  mean_err  sd_err\n";
  char buf[160];
  for (const auto& m : metrics) {
    std::snprintf(buf, sizeof buf, "%-10s %2zu %9.2f %7.2f %7.2f %7.2f %9.2f %7.2f\n",
                  m.task_id.c_str(), m.n, m.mean_s, m.sd_s, m.min_s, m.max_s,
                  m.mean_errors, m.sd_errors);
    out += buf;
  }
  return out;
}

}  // namespace marge::eval
