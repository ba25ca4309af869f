#include "dpminv/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dpminv/rng.hpp"
#include "dpminv/tensor_io.hpp"

namespace dpminv {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing field");
  return j.at(key);
}

ScheduleKind parse_schedule_kind(const std::string& s, const std::string& path) {
  if (s == "uniform-logsnr") return ScheduleKind::UniformLogSnr;
  if (s == "vp-cosine") return ScheduleKind::VpCosine;
  if (s == "vp-linear-beta") return ScheduleKind::VpLinearBeta;
  fail(path, "unknown schedule kind '" + s + "'");
}

MeanSpec parse_mean(const json& j, const std::string& path) {
  MeanSpec m;
  if (j.is_array()) {
    m.values = j.get<Vec>();
    return m;
  }
  if (j.is_number()) {
    m.constant = j.get<double>();
    return m;
  }
  if (!j.is_object()) fail(path, "mean must be an array, number, or object");
  if (j.contains("constant")) {
    m.constant = j.at("constant").get<double>();
  } else if (j.contains("scale")) {
    m.scale = j.at("scale").get<double>();
    m.pattern_seed = j.value("seed", std::uint64_t{0});
  } else if (j.contains("tensor")) {
    m.tensor_path = j.at("tensor").get<std::string>();
  } else {
    fail(path, "mean object needs 'constant', 'scale', or 'tensor'");
  }
  return m;
}

ModelSpec parse_model(const json& j, const std::string& path);

ComponentSpec parse_component(const json& j, const std::string& path) {
  ComponentSpec c;
  c.weight = j.value("weight", 1.0);
  c.variance = j.value("variance", 1.0);
  if (j.contains("mean")) c.mean = parse_mean(j.at("mean"), path + ".mean");
  else c.mean.constant = 0.0;
  return c;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  ModelSpec m;
  const std::string kind = require(j, "kind", path).get<std::string>();
  m.dim = j.value("dim", 8);
  if (kind == "zero") {
    m.kind = ModelSpec::Kind::Zero;
  } else if (kind == "gaussian") {
    m.kind = ModelSpec::Kind::Gaussian;
    ComponentSpec c = parse_component(j, path);
    c.weight = 1.0;
    m.components = {std::move(c)};
  } else if (kind == "mixture") {
    m.kind = ModelSpec::Kind::Mixture;
    const auto& comps = require(j, "components", path);
    if (!comps.is_array() || comps.empty()) fail(path + ".components", "need a non-empty array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      m.components.push_back(
          parse_component(comps[i], path + ".components[" + std::to_string(i) + "]"));
    }
  } else if (kind == "guided") {
    m.kind = ModelSpec::Kind::Guided;
    m.omega = j.value("omega", 3.0);
    m.cond = std::make_shared<ModelSpec>(parse_model(require(j, "cond", path), path + ".cond"));
    m.uncond =
        std::make_shared<ModelSpec>(parse_model(require(j, "uncond", path), path + ".uncond"));
    m.dim = m.cond->dim;
  } else {
    fail(path + ".kind", "unknown model kind '" + kind + "'");
  }
  return m;
}

UpdateRule parse_update(const json& j, const std::string& path,
                        const char* default_kind) {
  const std::string kind = j.value("update", std::string(default_kind));
  UpdateRule r;
  if (kind == "forward-step") {
    r = UpdateRule::forward_step();
  } else if (kind == "forward-step-decaying") {
    r = UpdateRule::forward_step_decaying();
  } else if (kind == "gradient-descent") {
    r = UpdateRule::gradient_descent();
  } else {
    fail(path + ".update", "unknown update rule '" + kind + "'");
  }
  if (j.contains("initial_step")) r.initial_step = j.at("initial_step").get<double>();
  if (j.contains("halving_window")) r.halving_window = j.at("halving_window").get<int>();
  if (j.contains("min_step")) r.min_step = j.at("min_step").get<double>();
  if (j.contains("warmup_steps")) r.warmup_steps = j.at("warmup_steps").get<int>();
  return r;
}

MethodSpec parse_method(const json& j, const std::string& path) {
  MethodSpec m;
  const std::string method = require(j, "method", path).get<std::string>();
  if (method == "naive") {
    m.config = InversionConfig::naive(j.value("steps", 1000));
  } else if (method == "backward-euler") {
    m.config = InversionConfig::backward_euler(parse_update(j, path, "forward-step"));
  } else if (method == "high-order-2m") {
    m.config = InversionConfig::high_order_2m(
        j.value("J", 10), parse_update(j, path, "forward-step-decaying"));
  } else if (method == "fpi") {
    m.config = InversionConfig::fpi(j.value("max_iters", 500));
  } else {
    fail(path + ".method", "unknown inversion method '" + method + "'");
  }
  if (j.contains("tol")) m.config.tol = j.at("tol").get<double>();
  if (j.contains("max_iters")) m.config.max_iters = j.at("max_iters").get<int>();
  m.label = j.value("label", std::string());
  if (m.label.empty()) m.label = method_label(m);
  return m;
}

}  // namespace

Vec MeanSpec::materialize(int dim) const {
  if (values) {
    if (static_cast<int>(values->size()) != dim)
      throw std::invalid_argument("config: mean array length does not match dim");
    return *values;
  }
  if (constant) return Vec(dim, *constant);
  if (scale) {
    Rng rng(pattern_seed);
    Vec v = rng.gaussian_vec(dim);
    for (double& x : v) x *= *scale;
    return v;
  }
  if (tensor_path) {
    TensorFile t = read_tensor(*tensor_path);
    if (static_cast<int>(t.data.size()) != dim)
      throw std::invalid_argument("config: tensor mean length does not match dim");
    return t.data;
  }
  return Vec(dim, 0.0);
}

NoiseSchedule build_schedule(const ScheduleSpec& spec) {
  return NoiseSchedule::make(spec.kind, spec.params);
}

TimeGrid build_grid(const GridSpec& spec, const NoiseSchedule& schedule) {
  return TimeGrid::make(schedule, spec.steps, spec.spacing);
}

std::shared_ptr<const DataPredictionModel> build_model(const ModelSpec& spec,
                                                       const NoiseSchedule& schedule) {
  switch (spec.kind) {
    case ModelSpec::Kind::Zero:
      return std::make_shared<ZeroModel>();
    case ModelSpec::Kind::Gaussian: {
      const auto& c = spec.components.at(0);
      return std::make_shared<GaussianDenoiser>(schedule, c.mean.materialize(spec.dim),
                                                c.variance);
    }
    case ModelSpec::Kind::Mixture: {
      std::vector<MixtureComponent> comps;
      for (const auto& c : spec.components)
        comps.push_back({c.weight, c.mean.materialize(spec.dim), c.variance});
      return std::make_shared<MixtureDenoiser>(schedule, std::move(comps));
    }
    case ModelSpec::Kind::Guided:
      return std::make_shared<GuidedModel>(spec.omega, build_model(*spec.cond, schedule),
                                           build_model(*spec.uncond, schedule));
  }
  throw std::logic_error("build_model: unknown kind");
}

std::string method_label(const MethodSpec& spec) {
  switch (spec.config.method) {
    case InversionConfig::Method::Naive:
      return "naive-" + std::to_string(spec.config.naive_steps);
    case InversionConfig::Method::BackwardEulerDdim:
      return "backward-euler";
    case InversionConfig::Method::HighOrder2m:
      return "high-order-2m-J" + std::to_string(spec.config.substeps);
    case InversionConfig::Method::Fpi:
      return "fpi";
  }
  return "unknown";
}

const char* experiment_name(ExperimentConfig::Kind kind) {
  switch (kind) {
    case ExperimentConfig::Kind::Reconstruct: return "reconstruct";
    case ExperimentConfig::Kind::SweepNaive: return "sweep-naive";
    case ExperimentConfig::Kind::Stability: return "stability";
    case ExperimentConfig::Kind::Decoder: return "decoder";
    case ExperimentConfig::Kind::Watermark: return "watermark";
  }
  return "unknown";
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON syntax error: ") + e.what());
  }

  ExperimentConfig cfg;
  const std::string exp = require(j, "experiment", "$").get<std::string>();
  if (exp == "reconstruct") cfg.experiment = ExperimentConfig::Kind::Reconstruct;
  else if (exp == "sweep-naive") cfg.experiment = ExperimentConfig::Kind::SweepNaive;
  else if (exp == "stability") cfg.experiment = ExperimentConfig::Kind::Stability;
  else if (exp == "decoder") cfg.experiment = ExperimentConfig::Kind::Decoder;
  else if (exp == "watermark") cfg.experiment = ExperimentConfig::Kind::Watermark;
  else fail("$.experiment", "unknown experiment '" + exp + "'");

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    cfg.schedule.kind = parse_schedule_kind(s.value("kind", std::string("uniform-logsnr")),
                                            "$.schedule.kind");
    if (s.contains("T")) cfg.schedule.params.T = s.at("T").get<double>();
    if (s.contains("lambda_max")) cfg.schedule.params.lambda_max = s.at("lambda_max").get<double>();
    if (s.contains("lambda_min")) cfg.schedule.params.lambda_min = s.at("lambda_min").get<double>();
    if (s.contains("beta_min")) cfg.schedule.params.beta_min = s.at("beta_min").get<double>();
    if (s.contains("beta_max")) cfg.schedule.params.beta_max = s.at("beta_max").get<double>();
    if (s.contains("cosine_s")) cfg.schedule.params.cosine_s = s.at("cosine_s").get<double>();
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.grid.steps = g.value("steps", 50);
    const std::string sp = g.value("spacing", std::string("uniform-lambda"));
    if (sp == "uniform-lambda") cfg.grid.spacing = GridSpacing::UniformLambda;
    else if (sp == "uniform-t") cfg.grid.spacing = GridSpacing::UniformT;
    else fail("$.grid.spacing", "unknown spacing '" + sp + "'");
  }

  if (j.contains("solver")) {
    const std::string s = j.at("solver").get<std::string>();
    if (s == "ddim") cfg.solver = SolverKind::Ddim;
    else if (s == "dpmpp2m") cfg.solver = SolverKind::Dpmpp2m;
    else fail("$.solver", "unknown solver '" + s + "'");
  }

  if (j.contains("model")) cfg.model = parse_model(j.at("model"), "$.model");

  if (j.contains("methods")) {
    const auto& ms = j.at("methods");
    if (!ms.is_array()) fail("$.methods", "must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i)
      cfg.methods.push_back(parse_method(ms[i], "$.methods[" + std::to_string(i) + "]"));
  }

  cfg.trials = j.value("trials", cfg.trials);
  if (cfg.trials < 1) fail("$.trials", "must be >= 1");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.threads = j.value("threads", 0);
  cfg.dump_reports = j.value("dump_reports", false);

  if (j.contains("naive_sweep")) cfg.naive_sweep = j.at("naive_sweep").get<std::vector<int>>();
  if (j.contains("omega_sweep")) cfg.omega_sweep = j.at("omega_sweep").get<std::vector<double>>();
  if (j.contains("rho_sweep")) cfg.rho_sweep = j.at("rho_sweep").get<std::vector<double>>();

  if (j.contains("watermark")) {
    const auto& w = j.at("watermark");
    cfg.watermark.grid_size = w.value("grid_size", 16);
    if (w.contains("radii")) cfg.watermark.radii = w.at("radii").get<std::vector<int>>();
    cfg.watermark.perturb_sigma = w.value("perturb", 0.1);
    if (w.contains("keys")) {
      cfg.watermark.keys.clear();
      for (std::size_t i = 0; i < w.at("keys").size(); ++i) {
        const auto& k = w.at("keys")[i];
        WatermarkKeySpec ks;
        ks.id = k.value("id", static_cast<int>(i));
        ks.base = Cplx(k.value("base_re", 1.5), k.value("base_im", 0.0));
        ks.seed = k.value("seed", std::uint64_t{100 * (i + 1)});
        cfg.watermark.keys.push_back(ks);
      }
    }
  }

  if (j.contains("decoder")) {
    const auto& d = j.at("decoder");
    cfg.decoder.d_latent = d.value("d_latent", 16);
    cfg.decoder.d_out = d.value("d_out", 64);
    cfg.decoder.seed = d.value("seed", std::uint64_t{42});
    cfg.decoder.clip_preactivation = d.value("clip_preactivation", 7.8);
    cfg.decoder.in_range_preactivation = d.value("in_range_preactivation", 2.9);
    cfg.decoder.invert.max_iters = d.value("max_iters", 100);
    cfg.decoder.invert.learning_rate = d.value("learning_rate", 0.1);
    cfg.decoder.invert.warmup_steps = d.value("warmup_steps", 10);
    cfg.decoder.invert.tol = d.value("tol", 1e-6);
  }

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace dpminv
