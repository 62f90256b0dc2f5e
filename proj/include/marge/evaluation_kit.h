#pragma once

#include <array>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace marge::eval {

inline constexpr std::size_t kSusItems = 10;
using SusResponse = std::array<int, kSusItems>;

// Brooke's scoring: odd items contribute (v - 1), even items (5 - v), sum
// scaled by 2.5. Throws Error{InvalidResponse} unless there are exactly ten
// items in [1, 5].
double sus_score(std::span<const int> items);

struct GradeBand {
  double min_score;
  std::string grade;
  int percentile_lo;
  int percentile_hi;
};

struct LabelBand {
  double min_score;
  std::string label;
};

// Lookup tables; each list is ascending by min_score and starts at 0.
struct SusBands {
  std::vector<GradeBand> grades;
  std::vector<LabelBand> acceptability;
  std::vector<LabelBand> nps;
  std::vector<LabelBand> adjective;
  double average_score = 68.0;
};

// Curved grading scale plus the label tables. Also shipped as
// data/sus_bands.json.
const SusBands& default_sus_bands();
SusBands sus_bands_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SusBands& bands);

struct SusInterpretation {
  double score = 0.0;
  std::string letter_grade;
  int percentile_lo = 0;
  int percentile_hi = 0;
  std::string percentile_band;  // relative to the average score
  std::string acceptability;
  std::string nps_category;
  std::string adjective;
};

// Throws Error{OutOfRange} unless 0 <= mean_score <= 100.
SusInterpretation sus_interpret(double mean_score,
                                const SusBands& bands = default_sus_bands());

struct SusSummary {
  std::vector<double> scores;
  double mean = 0.0;
  SusInterpretation interpretation;
};

// Throws Error{EmptyInput} for no respondents.
SusSummary summarize_sus(std::span<const SusResponse> responses,
                         const SusBands& bands = default_sus_bands());

struct TaskSample {
  std::string task_id;
  double duration_s = 0.0;
  double errors = 0.0;
};

struct TaskMetrics {
  std::string task_id;
  std::size_t n = 0;
  double mean_s = 0.0;
  double sd_s = 0.0;  // sample SD (n - 1); 0 for a single sample
  double min_s = 0.0;
  double max_s = 0.0;
  double mean_errors = 0.0;
  double sd_errors = 0.0;
};

// Samples of one task. Throws Error{EmptyInput}; Error{InvalidResponse} for
// negative or non-finite values.
TaskMetrics task_metrics(std::span<const TaskSample> samples);

// Groups by task_id, in first-seen order.
std::vector<TaskMetrics> task_metrics_by_task(std::span<const TaskSample> samples);

// One respondent per row, ten integer columns. A non-numeric first row is a
// header. Throws Error{InvalidResponse} with the line number.
std::vector<SusResponse> read_sus_csv(std::istream& in);
// task_id,duration_s,errors rows, optional header.
std::vector<TaskSample> read_task_csv(std::istream& in);

nlohmann::ordered_json to_json(const SusInterpretation& interp);
nlohmann::ordered_json to_json(const SusSummary& summary);
nlohmann::ordered_json to_json(const TaskMetrics& metrics);

std::string format_sus_table(const SusSummary& summary);
std::string format_task_table(const std::vector<TaskMetrics>& metrics);

}  // namespace marge::eval
