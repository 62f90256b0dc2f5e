#pragma once

// Reference computations written independently of the library code.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

// Beacon advertisement assembled byte by byte from the wire layout.
inline std::vector<std::uint8_t> encode_frame(const std::uint8_t (&uuid)[16],
                                              unsigned major, unsigned minor,
                                              int measured_power) {
  std::vector<std::uint8_t> out;
  out.push_back(0x4C);
  out.push_back(0x00);
  out.push_back(0x02);
  out.push_back(0x15);
  for (auto b : uuid) out.push_back(b);
  out.push_back(static_cast<std::uint8_t>(major / 256));
  out.push_back(static_cast<std::uint8_t>(major % 256));
  out.push_back(static_cast<std::uint8_t>(minor / 256));
  out.push_back(static_cast<std::uint8_t>(minor % 256));
  out.push_back(static_cast<std::uint8_t>(measured_power < 0 ? 256 + measured_power
                                                             : measured_power));
  return out;
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

// Textbook two-pass mean and sample SD.
inline Moments two_pass(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline double relative_error(double got, double want) {
  if (want == 0.0) return std::fabs(got);
  return std::fabs(got - want) / std::fabs(want);
}

// Brooke's SUS arithmetic, positions 1-based.
inline double sus(const std::vector<int>& items) {
  int sum = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    sum += (i % 2 == 0) ? items[i] - 1 : 5 - items[i];
  }
  return sum * 2.5;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "marge-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
