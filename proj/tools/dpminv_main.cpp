#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dpminv/config.hpp"
#include "dpminv/experiments.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "RNG seed (overrides config)");
  cmd->add_option("--trials", args.trials, "trial count (overrides config)");
  cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)");
}

int run(const CommonArgs& args, dpminv::ExperimentConfig::Kind expected, CLI::App* cmd) {
  dpminv::ExperimentConfig cfg = dpminv::load_config(args.config_path);
  if (cfg.experiment != expected) {
    std::cerr << "error: config declares experiment '"
              << dpminv::experiment_name(cfg.experiment) << "' but the '"
              << dpminv::experiment_name(expected) << "' subcommand was invoked\n";
    return 2;
  }
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (cmd->count("--seed") > 0) cfg.seed = args.seed;
  if (args.trials > 0) cfg.trials = args.trials;
  if (args.threads >= 0) cfg.threads = args.threads;

  const auto summary = dpminv::run_experiment(cfg);
  std::cout << summary.dump(2) << "\n";
  std::cout << "results written to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact inversion benchmarks for diffusion ODE samplers"};
  app.require_subcommand(1);

  using Kind = dpminv::ExperimentConfig::Kind;
  const std::pair<const char*, Kind> kinds[] = {
      {"reconstruct", Kind::Reconstruct}, {"sweep-naive", Kind::SweepNaive},
      {"stability", Kind::Stability},     {"watermark", Kind::Watermark},
      {"decoder", Kind::Decoder},
  };

  struct Sub {
    CLI::App* cmd;
    CommonArgs args;
    Kind kind;
  };
  std::vector<Sub> subs;
  subs.reserve(5);
  for (const auto& [name, kind] : kinds) {
    Sub sub;
    sub.cmd = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub.kind = kind;
    subs.push_back(std::move(sub));
    add_common(subs.back().cmd, subs.back().args);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& sub : subs) {
      if (sub.cmd->parsed()) return run(sub.args, sub.kind, sub.cmd);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
