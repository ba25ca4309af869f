#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpminv/fft.hpp"
#include "dpminv/inversion.hpp"
#include "dpminv/latent.hpp"
#include "dpminv/models.hpp"
#include "dpminv/schedule.hpp"
#include "dpminv/solvers.hpp"

namespace dpminv {

/// Mean vector specification: exactly one source.
struct MeanSpec {
  std::optional<Vec> values;          // explicit array
  std::optional<double> constant;     // constant fill
  std::optional<double> scale;        // scale * N(0,1) drawn from pattern_seed
  std::uint64_t pattern_seed = 0;
  std::optional<std::string> tensor_path;  // tensor file (dims product = dim)

  Vec materialize(int dim) const;
};

struct ComponentSpec {
  double weight = 1.0;
  double variance = 1.0;
  MeanSpec mean;
};

struct ModelSpec {
  enum class Kind { Zero, Gaussian, Mixture, Guided };
  Kind kind = Kind::Gaussian;
  int dim = 8;
  std::vector<ComponentSpec> components;  // Gaussian uses exactly one
  // Guided
  double omega = 3.0;
  std::shared_ptr<ModelSpec> cond, uncond;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::UniformLogSnr;
  ScheduleParams params;
};

struct GridSpec {
  int steps = 50;
  GridSpacing spacing = GridSpacing::UniformLambda;
};

struct MethodSpec {
  InversionConfig config;
  std::string label;  // auto-derived when empty
};

struct WatermarkKeySpec {
  int id = 0;
  Cplx base{1.5, 0.0};
  std::uint64_t seed = 0;
};

struct WatermarkSpec {
  int grid_size = 16;
  std::vector<int> radii = {2, 4, 6};
  double perturb_sigma = 0.1;
  std::vector<WatermarkKeySpec> keys;
};

struct DecoderSpec {
  int d_latent = 16;
  int d_out = 64;
  std::uint64_t seed = 42;
  double clip_preactivation = 7.8;  // target max |pre| for clipped draws
  double in_range_preactivation = 2.9;
  DecoderInvertConfig invert;
};

struct ExperimentConfig {
  enum class Kind { Reconstruct, SweepNaive, Stability, Decoder, Watermark };

  Kind experiment = Kind::Reconstruct;
  ModelSpec model;
  ScheduleSpec schedule;
  GridSpec grid;
  SolverKind solver = SolverKind::Ddim;
  std::vector<MethodSpec> methods;
  int trials = 20;
  std::uint64_t seed = 1234;
  std::string out_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
  bool dump_reports = false;

  std::vector<int> naive_sweep = {10, 50, 100, 500, 1000};
  std::vector<double> omega_sweep = {1.0, 2.0, 3.0, 5.0, 7.5};
  std::vector<double> rho_sweep = {0.5, 0.25, 0.1, 0.05};

  WatermarkSpec watermark;
  DecoderSpec decoder;
};

/// Parses a JSON config file. Errors carry the offending field path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

NoiseSchedule build_schedule(const ScheduleSpec& spec);
TimeGrid build_grid(const GridSpec& spec, const NoiseSchedule& schedule);
std::shared_ptr<const DataPredictionModel> build_model(const ModelSpec& spec,
                                                       const NoiseSchedule& schedule);
std::string method_label(const MethodSpec& spec);

const char* experiment_name(ExperimentConfig::Kind kind);

}  // namespace dpminv
