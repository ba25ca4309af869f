#include "dpminv/inversion.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "dpminv/kernels.hpp"
#include "dpminv/rng.hpp"

namespace dpminv {

namespace {

constexpr double kDivergenceFactor = 1e6;

struct StepCoeffs {
  double sigma_ratio;      // sigma_next / sigma_prev
  double pred_coeff;       // -alpha_next (e^{-h} - 1), positive
  double inv_sigma_ratio;  // sigma_prev / sigma_next
};

StepCoeffs step_coeffs(const NoiseSchedule& schedule, double t_prev, double t_next) {
  const auto prev = schedule.eval(t_prev);
  const auto next = schedule.eval(t_next);
  if (!(next.lambda > prev.lambda))
    throw std::invalid_argument("inversion: times not in sampling direction");
  const double h = next.lambda - prev.lambda;
  return StepCoeffs{next.sigma / prev.sigma,
                    -next.alpha * (std::exp(-h) - 1.0),
                    prev.sigma / next.sigma};
}

double rel_residual(const Vec& r, double target_norm) {
  return norm2(r) / std::max(target_norm, 1e-12);
}

// Shared implicit solve: iterate an update rule on the candidate preimage
// until the forward map reproduces the target. forward(z) must return the
// modeled next state; grad(z, r) the vjp-based loss gradient (GradientDescent
// only). Returns the converged iterate, or the best-residual iterate seen.
StepSolveRecord solve_step(const std::function<Vec(const Vec&)>& forward,
                           const std::function<Vec(const Vec&, const Vec&)>& grad,
                           const Vec& target, Vec& z, const UpdateRule& rule,
                           double base_step, double tol, int max_iters) {
  StepSolveRecord rec;
  rec.residual_history.reserve(16);
  const double tn = norm2(target);

  double step = base_step;
  double window_best = std::numeric_limits<double>::infinity();
  int since_improve = 0;

  Vec best_z = z;
  double best_res = std::numeric_limits<double>::infinity();

  for (int k = 0; k < max_iters; ++k) {
    Vec zp = forward(z);
    Vec r = axpby(1.0, zp, -1.0, target);
    const double res = rel_residual(r, tn);
    rec.residual_history.push_back(res);
    rec.iterations = k + 1;
    if (res < best_res) {
      best_res = res;
      best_z = z;
    }
    if (res <= tol) {
      rec.converged = true;
      break;
    }
    if (res < window_best) {
      window_best = res;
      since_improve = 0;
    } else if (++since_improve >= rule.halving_window) {
      step = std::max(step / 2.0, rule.min_step);
      since_improve = 0;
      window_best = res;
    }
    double eff = step;
    if (rule.warmup_steps > 0 && k < rule.warmup_steps) {
      eff *= static_cast<double>(k + 1) / (rule.warmup_steps + 1);
    }
    if (rule.kind == UpdateRule::Kind::ForwardStep) {
      add_scaled(z, -eff, r);
    } else {
      Vec g = grad(z, r);
      add_scaled(z, -eff, g);
    }
  }
  rec.final_residual = best_res;
  z = std::move(best_z);
  return rec;
}

}  // namespace

double UpdateRule::step_for(int coarse_index) const {
  if (schedule == StepSchedule::Constant) return initial_step;
  if (coarse_index <= 1) return closing_step;
  return inverse_index_numerator / static_cast<double>(coarse_index);
}

UpdateRule UpdateRule::gradient_descent() {
  UpdateRule r;
  r.kind = Kind::GradientDescent;
  r.initial_step = 0.1;
  r.halving_window = 5;
  r.min_step = 1e-3;
  r.warmup_steps = 0;
  return r;
}

UpdateRule UpdateRule::forward_step() {
  UpdateRule r;
  r.kind = Kind::ForwardStep;
  r.initial_step = 0.5;
  r.halving_window = 20;
  r.min_step = 1e-4;
  r.warmup_steps = 20;
  return r;
}

UpdateRule UpdateRule::forward_step_decaying() {
  UpdateRule r = forward_step();
  r.schedule = StepSchedule::InverseIndex;
  r.inverse_index_numerator = 10.0;
  r.closing_step = 1.0;
  return r;
}

InversionConfig InversionConfig::naive(int steps) {
  InversionConfig c;
  c.method = Method::Naive;
  c.naive_steps = steps;
  return c;
}

InversionConfig InversionConfig::backward_euler(UpdateRule update) {
  InversionConfig c;
  c.method = Method::BackwardEulerDdim;
  c.update = update;
  return c;
}

InversionConfig InversionConfig::high_order_2m(int substeps, UpdateRule update) {
  InversionConfig c;
  c.method = Method::HighOrder2m;
  c.substeps = substeps;
  c.update = update;
  return c;
}

InversionConfig InversionConfig::fpi(int max_iters) {
  InversionConfig c;
  c.method = Method::Fpi;
  c.max_iters = max_iters;
  return c;
}

bool InversionReport::all_converged() const {
  for (const auto& s : steps) {
    if (!s.converged) return false;
  }
  return true;
}

bool InversionReport::any_diverged() const {
  for (const auto& s : steps) {
    if (s.diverged) return true;
  }
  return false;
}

Vec naive_invert_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const Vec& x, double t_src, double t_dst) {
  // src is the data-side endpoint (larger lambda); dst lies toward noise
  const auto sc = step_coeffs(schedule, t_dst, t_src);
  Vec pred = model.evaluate(x, t_dst);
  Vec out = axpby(sc.inv_sigma_ratio, x, -sc.inv_sigma_ratio * sc.pred_coeff, pred);
  if (!all_finite(out))
    throw std::runtime_error("naive_invert_step: non-finite state");
  return out;
}

Vec naive_ddim_invert(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const TimeGrid& grid, const Vec& x_0) {
  Vec x = x_0;
  for (int i = grid.steps(); i >= 1; --i) {
    x = naive_invert_step(model, schedule, x, grid.t(i), grid.t(i - 1));
  }
  return x;
}

StepResidual residual(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const Vec& z_prev_candidate, const Vec& z_next_target,
                      double t_prev, double t_next) {
  StepResidual out;
  out.z_next = ddim_step(model, schedule, z_prev_candidate, t_prev, t_next);
  out.r = axpby(1.0, out.z_next, -1.0, z_next_target);
  return out;
}

InversionReport backward_euler_invert(const DataPredictionModel& model,
                                      const NoiseSchedule& schedule,
                                      const TimeGrid& grid, const Vec& x_0,
                                      const InversionConfig& config) {
  if (config.method != InversionConfig::Method::BackwardEulerDdim)
    throw std::invalid_argument("backward_euler_invert: wrong method in config");
  if (config.update.kind == UpdateRule::Kind::GradientDescent && !model.has_vjp())
    throw UnsupportedModelError("backward_euler_invert: gradient descent needs vjp");

  const auto start = std::chrono::steady_clock::now();
  InversionReport report;
  Vec z = x_0;
  for (int i = grid.steps(); i >= 1; --i) {
    const double t_prev = grid.t(i - 1), t_next = grid.t(i);
    const auto sc = step_coeffs(schedule, t_prev, t_next);
    const Vec target = z;
    Vec cand = naive_invert_step(model, schedule, target, t_next, t_prev);

    auto forward = [&](const Vec& c) {
      return ddim_step(model, schedule, c, t_prev, t_next);
    };
    auto grad = [&](const Vec& c, const Vec& r) {
      // d/dc ||forward(c) - target||^2, factor 2 folded into the step size
      Vec g = model.vjp(c, t_prev, r);
      return axpby(sc.sigma_ratio, r, sc.pred_coeff, g);
    };
    StepSolveRecord rec = solve_step(forward, grad, target, cand, config.update,
                                     config.update.step_for(i), config.tol,
                                     config.max_iters);
    rec.coarse_index = i;
    report.steps.push_back(std::move(rec));
    z = std::move(cand);
  }
  report.x_hat = std::move(z);
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

InversionReport invert_dpmpp2m(const DataPredictionModel& model,
                               const NoiseSchedule& schedule, const TimeGrid& grid,
                               const Vec& x_0, const InversionConfig& config) {
  if (config.method != InversionConfig::Method::HighOrder2m)
    throw std::invalid_argument("invert_dpmpp2m: wrong method in config");
  if (config.substeps < 1)
    throw std::invalid_argument("invert_dpmpp2m: substeps must be >= 1");
  if (config.update.kind == UpdateRule::Kind::GradientDescent && !model.has_vjp())
    throw UnsupportedModelError("invert_dpmpp2m: gradient descent needs vjp");
  const int M = grid.steps();
  if (M < 2) {
    // single transition: nothing multistep to undo
    InversionConfig first = InversionConfig::backward_euler(config.update);
    first.tol = config.tol;
    first.max_iters = config.max_iters;
    return backward_euler_invert(model, schedule, grid, x_0, first);
  }

  const auto start = std::chrono::steady_clock::now();
  const int J = config.substeps;
  InversionReport report;
  Vec z = x_0;

  for (int i = M; i >= 2; --i) {
    // fine explicit substeps from t_i across t_{i-1} to t_{i-2}; the two
    // frozen states feed the high-order term
    Vec y = z;
    Vec y_im1;
    for (int j = 1; j <= 2 * J; ++j) {
      y = naive_invert_step(model, schedule, y, grid.fractional_t(i, j - 1, J),
                            grid.fractional_t(i, j, J));
      if (j == J) y_im1 = y;
    }
    const Vec& y_im2 = y;

    const double t_prev = grid.t(i - 1), t_next = grid.t(i);
    const auto sc = step_coeffs(schedule, t_prev, t_next);
    const double r_i = grid.r(i);

    // frozen during the inner iteration
    Vec p1 = model.evaluate(y_im1, t_prev);
    Vec p2 = model.evaluate(y_im2, grid.t(i - 2));
    Vec high_order = axpby(1.0 / (2.0 * r_i), p1, -1.0 / (2.0 * r_i), p2);

    const Vec target = z;
    Vec cand = y_im1;
    auto forward = [&](const Vec& c) {
      Vec d = model.evaluate(c, t_prev);
      add_scaled(d, 1.0, high_order);
      return axpby(sc.sigma_ratio, c, sc.pred_coeff, d);
    };
    auto grad = [&](const Vec& c, const Vec& r) {
      Vec g = model.vjp(c, t_prev, r);
      return axpby(sc.sigma_ratio, r, sc.pred_coeff, g);
    };
    StepSolveRecord rec = solve_step(forward, grad, target, cand, config.update,
                                     config.update.step_for(i), config.tol,
                                     config.max_iters);
    rec.coarse_index = i;
    report.steps.push_back(std::move(rec));
    z = std::move(cand);
  }

  // closing first-order implicit step for t_1 -> t_0
  {
    const double t_prev = grid.t(0), t_next = grid.t(1);
    const auto sc = step_coeffs(schedule, t_prev, t_next);
    const Vec target = z;
    Vec cand = naive_invert_step(model, schedule, target, t_next, t_prev);
    auto forward = [&](const Vec& c) {
      return ddim_step(model, schedule, c, t_prev, t_next);
    };
    auto grad = [&](const Vec& c, const Vec& r) {
      Vec g = model.vjp(c, t_prev, r);
      return axpby(sc.sigma_ratio, r, sc.pred_coeff, g);
    };
    StepSolveRecord rec = solve_step(forward, grad, target, cand, config.update,
                                     config.update.step_for(1), config.tol,
                                     config.max_iters);
    rec.coarse_index = 1;
    report.steps.push_back(std::move(rec));
    z = std::move(cand);
  }

  report.x_hat = std::move(z);
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

InversionReport fpi_invert(const DataPredictionModel& model, const NoiseSchedule& schedule,
                           const TimeGrid& grid, const Vec& x_0,
                           const InversionConfig& config) {
  if (config.method != InversionConfig::Method::Fpi)
    throw std::invalid_argument("fpi_invert: wrong method in config");

  const auto start = std::chrono::steady_clock::now();
  InversionReport report;
  Vec z = x_0;
  for (int i = grid.steps(); i >= 1; --i) {
    const double t_prev = grid.t(i - 1), t_next = grid.t(i);
    const auto sc = step_coeffs(schedule, t_prev, t_next);
    const Vec target = z;
    const double tn = norm2(target);

    // F(c) = (sigma_prev/sigma_next) (target + alpha_next (e^{-h}-1) model(c, t_prev));
    // applying F to the target itself is exactly the naive init
    auto F = [&](const Vec& c) {
      Vec pred = model.evaluate(c, t_prev);
      return axpby(sc.inv_sigma_ratio, target, -sc.inv_sigma_ratio * sc.pred_coeff,
                   pred);
    };
    Vec cand = F(target);

    StepSolveRecord rec;
    rec.coarse_index = i;
    Vec best = cand;
    double best_res = std::numeric_limits<double>::infinity();
    double first_res = -1.0;
    for (int k = 0; k < config.max_iters; ++k) {
      Vec zp = ddim_step(model, schedule, cand, t_prev, t_next);
      const double res = rel_residual(axpby(1.0, zp, -1.0, target), tn);
      rec.residual_history.push_back(res);
      rec.iterations = k + 1;
      if (first_res < 0.0) first_res = res;
      if (res < best_res) {
        best_res = res;
        best = cand;
      }
      if (res <= config.tol) {
        rec.converged = true;
        break;
      }
      if (res > kDivergenceFactor * std::max(first_res, 1e-300)) {
        rec.diverged = true;
        break;
      }
      cand = F(cand);
    }
    rec.final_residual = best_res;
    report.steps.push_back(std::move(rec));
    z = std::move(best);
  }
  report.x_hat = std::move(z);
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double fpi_lipschitz_threshold(const NoiseSchedule& schedule, double t_prev,
                               double t_next) {
  const auto sc = step_coeffs(schedule, t_prev, t_next);
  return 1.0 / (sc.inv_sigma_ratio * sc.pred_coeff);
}

bool check_nonexpansive(const DataPredictionModel& model, const NoiseSchedule& schedule,
                        double t_prev, double t_next, int n_probes, int dim,
                        std::uint64_t seed) {
  const auto sc = step_coeffs(schedule, t_prev, t_next);
  const double coeff = sc.inv_sigma_ratio * sc.pred_coeff;
  Rng rng(seed);
  for (int p = 0; p < n_probes; ++p) {
    const Vec a = rng.gaussian_vec(dim);
    const Vec b = rng.gaussian_vec(dim);
    const Vec fa = model.evaluate(a, t_prev);
    const Vec fb = model.evaluate(b, t_prev);
    const double lhs = coeff * dist2(fa, fb);
    const double rhs = dist2(a, b);
    if (lhs > rhs * (1.0 + 1e-9)) return false;
  }
  return true;
}

}  // namespace dpminv
