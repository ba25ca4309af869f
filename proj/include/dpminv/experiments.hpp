#pragma once

#include <string>

#include <json.hpp>

#include "dpminv/config.hpp"

namespace dpminv {

/// Runs the configured experiment and writes results.csv, summary.json,
/// plot.svg and meta.json into cfg.out_dir. Returns the summary.
nlohmann::json run_experiment(const ExperimentConfig& cfg);

}  // namespace dpminv
