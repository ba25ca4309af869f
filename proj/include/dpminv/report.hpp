#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dpminv/inversion.hpp"

namespace dpminv {

// shortest round-trippable decimal form; identical across runs
std::string format_double(double v);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

/// Writes header + rows (rows are sorted lexicographically first so the
/// body is independent of execution order).
void write_csv(const std::string& path, const std::string& header,
               std::vector<std::string> rows);

void write_text_file(const std::string& path, const std::string& content);

nlohmann::json report_to_json(const InversionReport& report);

}  // namespace dpminv
