#include "dpminv/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dpminv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

void write_csv(const std::string& path, const std::string& header,
               std::vector<std::string> rows) {
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << header << "\n";
  for (const auto& r : rows) out << r << "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
}

nlohmann::json report_to_json(const InversionReport& report) {
  nlohmann::json j;
  j["wall_time_sec"] = report.wall_time_sec;
  j["all_converged"] = report.all_converged();
  j["any_diverged"] = report.any_diverged();
  auto& steps = j["steps"] = nlohmann::json::array();
  for (const auto& s : report.steps) {
    steps.push_back({{"coarse_index", s.coarse_index},
                     {"iterations", s.iterations},
                     {"final_residual", s.final_residual},
                     {"converged", s.converged},
                     {"diverged", s.diverged},
                     {"residual_history", s.residual_history}});
  }
  return j;
}

}  // namespace dpminv
