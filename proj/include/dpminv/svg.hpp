#pragma once

#include <string>
#include <vector>

namespace dpminv {

struct ChartSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Standalone SVG line chart; log-scaled axes skip non-positive values.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series, bool log_x = false,
                      bool log_y = false);

/// Standalone SVG bar chart (one bar per label).
void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label,
                     const std::vector<std::pair<std::string, double>>& bars,
                     bool log_y = false);

}  // namespace dpminv
