#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "dpminv/inversion.hpp"
#include "dpminv/metrics.hpp"
#include "dpminv/rng.hpp"
#include "support/oracles.hpp"

using namespace dpminv;

namespace {

NoiseSchedule default_schedule() {
  return NoiseSchedule::make(ScheduleKind::UniformLogSnr);
}

NoiseSchedule narrow_schedule() {
  ScheduleParams p;
  p.lambda_max = 1.0;
  p.lambda_min = -1.0;
  return NoiseSchedule::make(ScheduleKind::UniformLogSnr, p);
}

// Gaussian constituents with gain exactly c at time t
std::shared_ptr<GaussianDenoiser> gaussian_with_gain(const NoiseSchedule& s, double t,
                                                     double c, const Vec& mean) {
  const auto sv = s.eval(t);
  REQUIRE(c * sv.alpha < 1.0);
  const double s2 = c * sv.sigma * sv.sigma / (sv.alpha * (1.0 - c * sv.alpha));
  auto g = std::make_shared<GaussianDenoiser>(s, mean, s2);
  REQUIRE(g->gain(t) == doctest::Approx(c).epsilon(1e-12));
  return g;
}

// Test-side variant of the multistep inversion with every implicit equation
// solved exactly (affine models only); isolates the iterative update rule.
Vec invert_2m_exact_steps(const DataPredictionModel& model, const NoiseSchedule& s,
                          const TimeGrid& grid, const Vec& x_0, int J) {
  const int M = grid.steps();
  const int dim = static_cast<int>(x_0.size());
  Vec z = x_0;
  for (int i = M; i >= 2; --i) {
    Vec y = z, y_im1;
    for (int j = 1; j <= 2 * J; ++j) {
      y = naive_invert_step(model, s, y, grid.fractional_t(i, j - 1, J),
                            grid.fractional_t(i, j, J));
      if (j == J) y_im1 = y;
    }
    const Vec p1 = model.evaluate(y_im1, grid.t(i - 1));
    const Vec p2 = model.evaluate(y, grid.t(i - 2));
    const double r_i = grid.r(i);
    const Vec high_order = axpby(1.0 / (2 * r_i), p1, -1.0 / (2 * r_i), p2);
    const auto vp = s.eval(grid.t(i - 1)), vn = s.eval(grid.t(i));
    const double h = vn.lambda - vp.lambda;
    auto forward = [&](const Vec& c) {
      Vec d = model.evaluate(c, grid.t(i - 1));
      add_scaled(d, 1.0, high_order);
      return axpby(vn.sigma / vp.sigma, c, -vn.alpha * (std::exp(-h) - 1.0), d);
    };
    z = oracles::affine_map_invert(forward, z, dim);
  }
  auto closing = [&](const Vec& c) { return ddim_step(model, s, c, grid.t(0), grid.t(1)); };
  return oracles::affine_map_invert(closing, z, dim);
}

}  // namespace

TEST_CASE("naive inversion of the zero model roundtrips exactly") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 20, GridSpacing::UniformLambda);
  ZeroModel zero;
  Rng rng(1);
  const Vec xT = rng.gaussian_vec(5);
  const Vec x0 = sample(zero, s, grid, xT, SolverKind::Ddim).states.back();
  const Vec back = naive_ddim_invert(zero, s, grid, x0);
  CHECK(nmse(xT, back) <= 1e-14);
}

TEST_CASE("naive inversion error on affine data matches its affine composition") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 50, GridSpacing::UniformLambda);
  Rng rng(2);
  GaussianDenoiser g(s, rng.gaussian_vec(6), 1.0);
  const Vec xT = rng.gaussian_vec(6);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Ddim).states.back();
  const Vec back = naive_ddim_invert(g, s, grid, x0);
  // strictly positive reconstruction error
  CHECK(nmse(xT, back) > 1e-6);
  // the inversion map is affine; basis-probing it reproduces the output
  const Vec offset = naive_ddim_invert(g, s, grid, Vec(6, 0.0));
  Vec recombined = offset;
  for (int j = 0; j < 6; ++j) {
    Vec e(6, 0.0);
    e[j] = 1.0;
    const Vec col = naive_ddim_invert(g, s, grid, e);
    add_scaled(recombined, x0[j], axpby(1.0, col, -1.0, offset));
  }
  CHECK(dist2(back, recombined) < 1e-10 * (1.0 + norm2(back)));
}

TEST_CASE("naive inversion is the exact inverse of the implicit sampler") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 12, GridSpacing::UniformLambda);
  Rng rng(3);
  GaussianDenoiser g(s, rng.gaussian_vec(4), 0.9);
  const Vec xT = rng.gaussian_vec(4);
  // implicit sampler: x_i solves x_i = (s_i/s_{i-1}) x_{i-1} - a_i(e^{-h}-1) D(x_i, t_{i-1})
  Vec x = xT;
  for (int i = 1; i <= grid.steps(); ++i) {
    const auto vp = s.eval(grid.t(i - 1)), vn = s.eval(grid.t(i));
    const double h = vn.lambda - vp.lambda;
    const Vec budget = scaled(vn.sigma / vp.sigma, x);
    auto implicit = [&](const Vec& xi) {
      // residual form: xi + a(e^{-h}-1) D(xi) - budget = 0
      return axpby(1.0, xi, vn.alpha * (std::exp(-h) - 1.0), g.evaluate(xi, grid.t(i - 1)));
    };
    x = oracles::affine_map_invert(implicit, budget, 4);
  }
  const Vec back = naive_ddim_invert(g, s, grid, x);
  CHECK(nmse(xT, back) <= 1e-18);
}

TEST_CASE("residual vanishes at the true preimage") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(4);
  GaussianDenoiser g(s, rng.gaussian_vec(3), 1.0);
  const Vec x_prev = rng.gaussian_vec(3);
  const Vec x_next = ddim_step(g, s, x_prev, grid.t(4), grid.t(5));
  const auto res = residual(g, s, x_prev, x_next, grid.t(4), grid.t(5));
  CHECK(norm2(res.r) <= 1e-14);

  // zero model: candidate = (sigma_prev/sigma_next) * target has zero residual
  ZeroModel zero;
  const Vec target = rng.gaussian_vec(3);
  const double ratio = s.eval(grid.t(4)).sigma / s.eval(grid.t(5)).sigma;
  const auto rz = residual(zero, s, scaled(ratio, target), target, grid.t(4), grid.t(5));
  CHECK(norm2(rz.r) <= 1e-14);

  // random candidate: residual equals the affine arithmetic directly
  const Vec cand = rng.gaussian_vec(3);
  const auto rr = residual(g, s, cand, target, grid.t(4), grid.t(5));
  const Vec expect = axpby(1.0, ddim_step(g, s, cand, grid.t(4), grid.t(5)), -1.0, target);
  CHECK(dist2(rr.r, expect) == 0.0);
}

TEST_CASE("backward euler matches the exact affine inverse (both update rules)") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 50, GridSpacing::UniformLambda);
  Rng rng(5);
  GaussianDenoiser g(s, rng.gaussian_vec(6), 1.0);
  const Vec xT = rng.gaussian_vec(6);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Ddim).states.back();
  const Vec oracle = oracles::affine_map_invert(
      [&](const Vec& v) { return sample(g, s, grid, v, SolverKind::Ddim).states.back(); },
      x0, 6);
  CHECK(nmse(xT, oracle) <= 1e-16);  // the sampler is numerically invertible here

  for (UpdateRule rule : {UpdateRule::forward_step(), UpdateRule::gradient_descent()}) {
    const auto report =
        backward_euler_invert(g, s, grid, x0, InversionConfig::backward_euler(rule));
    CHECK(report.all_converged());
    CHECK(nmse(oracle, report.x_hat) <= 1e-10);
    CHECK(report.steps.size() == 50);
    // defining postcondition: the forward pass from the recovered noise
    // reproduces the observation
    const Vec resampled = sample(g, s, grid, report.x_hat, SolverKind::Ddim).states.back();
    CHECK(nmse(x0, resampled) <= 1e-12);
  }
}

TEST_CASE("backward euler on the zero model converges in one iteration per step") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  ZeroModel zero;
  Rng rng(6);
  const Vec x0 = rng.gaussian_vec(3);
  const auto report =
      backward_euler_invert(zero, s, grid, x0, InversionConfig::backward_euler());
  CHECK(report.all_converged());
  for (const auto& step : report.steps) CHECK(step.iterations <= 1);
}

TEST_CASE("backward euler beats naive inversion on a mixture by 1000x") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 50, GridSpacing::UniformLambda);
  Rng rng(7);
  Vec mu = rng.gaussian_vec(6);
  for (double& v : mu) v *= 1.5;
  MixtureDenoiser m(s, {{0.5, mu, 0.3}, {0.5, scaled(-1.0, mu), 0.3}});
  const Vec xT = rng.gaussian_vec(6);
  const Vec x0 = sample(m, s, grid, xT, SolverKind::Ddim).states.back();
  const auto report =
      backward_euler_invert(m, s, grid, x0, InversionConfig::backward_euler());
  CHECK(report.all_converged());
  const double be = nmse(xT, report.x_hat);
  const double nv = nmse(xT, naive_ddim_invert(m, s, grid, x0));
  CHECK(be * 1e3 <= nv);
}

TEST_CASE("gradient descent requires a vjp") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 5, GridSpacing::UniformLambda);
  struct NoVjp final : DataPredictionModel {
    Vec evaluate(const Vec& x, double) const override { return Vec(x.size(), 0.0); }
  } model;
  CHECK_THROWS_AS(
      backward_euler_invert(model, s, grid, Vec(3, 1.0),
                            InversionConfig::backward_euler(UpdateRule::gradient_descent())),
      UnsupportedModelError);
}

TEST_CASE("multistep inversion: iterative solver matches exact per-step solves") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(8);
  GaussianDenoiser g(s, rng.gaussian_vec(5), 1.0);
  const Vec xT = rng.gaussian_vec(5);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Dpmpp2m).states.back();
  auto cfg = InversionConfig::high_order_2m(10);
  cfg.tol = 1e-12;
  const auto report = invert_dpmpp2m(g, s, grid, x0, cfg);
  CHECK(report.all_converged());
  const Vec exact = invert_2m_exact_steps(g, s, grid, x0, 10);
  CHECK(nmse(exact, report.x_hat) <= 1e-18);
}

TEST_CASE("multistep inversion matches the whole-map affine inverse on a narrow band") {
  const NoiseSchedule s = narrow_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(9);
  GaussianDenoiser g(s, rng.gaussian_vec(8), 0.05);
  const Vec xT = rng.gaussian_vec(8);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Dpmpp2m).states.back();
  const auto report = invert_dpmpp2m(g, s, grid, x0, InversionConfig::high_order_2m(10));
  CHECK(report.all_converged());
  const Vec oracle = oracles::affine_map_invert(
      [&](const Vec& v) { return sample(g, s, grid, v, SolverKind::Dpmpp2m).states.back(); },
      x0, 8);
  CHECK(nmse(oracle, report.x_hat) <= 1e-8);
}

TEST_CASE("multistep inversion of the zero model roundtrips for any J") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 8, GridSpacing::UniformLambda);
  ZeroModel zero;
  Rng rng(10);
  const Vec xT = rng.gaussian_vec(4);
  const Vec x0 = sample(zero, s, grid, xT, SolverKind::Dpmpp2m).states.back();
  for (int J : {1, 3, 10}) {
    const auto report = invert_dpmpp2m(zero, s, grid, x0, InversionConfig::high_order_2m(J));
    CHECK(report.all_converged());
    CHECK(nmse(xT, report.x_hat) <= 1e-14);
  }
}

TEST_CASE("multistep inversion beats naive and first-order inversion on 2m data") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(11);
  Vec mu = rng.gaussian_vec(6);
  for (double& v : mu) v *= 1.5;
  MixtureDenoiser m(s, {{0.5, mu, 0.3}, {0.5, scaled(-1.0, mu), 0.3}});
  const Vec xT = rng.gaussian_vec(6);
  const Vec x0 = sample(m, s, grid, xT, SolverKind::Dpmpp2m).states.back();

  const auto alg2 = invert_dpmpp2m(m, s, grid, x0, InversionConfig::high_order_2m(10));
  const double e_alg2 = nmse(xT, alg2.x_hat);

  const TimeGrid fine = TimeGrid::make(s, 1000, GridSpacing::UniformLambda);
  const double e_naive = nmse(xT, naive_ddim_invert(m, s, fine, x0));

  const auto alg1 = backward_euler_invert(m, s, grid, x0, InversionConfig::backward_euler());
  const double e_alg1 = nmse(xT, alg1.x_hat);

  CHECK(e_alg2 < e_naive);
  CHECK(e_alg2 < e_alg1);
}

TEST_CASE("naive step sweep on 2m data decreases then saturates above the implicit method") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(12);
  Vec mu = rng.gaussian_vec(4);
  for (double& v : mu) v *= 1.5;
  MixtureDenoiser m(s, {{0.5, mu, 0.3}, {0.5, scaled(-1.0, mu), 0.3}});
  const Vec xT = rng.gaussian_vec(4);
  const Vec x0 = sample(m, s, grid, xT, SolverKind::Dpmpp2m).states.back();
  double e10 = 0, e100 = 0, e1000 = 0;
  for (auto [steps, out] : {std::pair<int, double*>{10, &e10}, {100, &e100}, {1000, &e1000}}) {
    const TimeGrid fg = TimeGrid::make(s, steps, GridSpacing::UniformLambda);
    *out = nmse(xT, naive_ddim_invert(m, s, fg, x0));
  }
  const auto alg2 = invert_dpmpp2m(m, s, grid, x0, InversionConfig::high_order_2m(10));
  const double e_alg2 = nmse(xT, alg2.x_hat);
  CHECK(e100 < e10);
  CHECK(e1000 < e10);
  CHECK(e_alg2 < e1000);
}

TEST_CASE("fpi converges to the affine inverse when contractive") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(13);
  // small variance keeps every per-step operator contractive
  GaussianDenoiser g(s, rng.gaussian_vec(5), 0.015);
  const Vec xT = rng.gaussian_vec(5);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Ddim).states.back();
  const auto report = fpi_invert(g, s, grid, x0, InversionConfig::fpi());
  CHECK(report.all_converged());
  CHECK_FALSE(report.any_diverged());
  const Vec oracle = oracles::affine_map_invert(
      [&](const Vec& v) { return sample(g, s, grid, v, SolverKind::Ddim).states.back(); },
      x0, 5);
  CHECK(nmse(oracle, report.x_hat) <= 1e-8);
}

TEST_CASE("fpi on the zero model converges immediately") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 6, GridSpacing::UniformLambda);
  ZeroModel zero;
  Rng rng(14);
  const auto report =
      fpi_invert(zero, s, grid, rng.gaussian_vec(3), InversionConfig::fpi());
  CHECK(report.all_converged());
  for (const auto& step : report.steps) CHECK(step.iterations <= 1);
}

TEST_CASE("fpi diverges beyond the guidance stability threshold; forward step recovers") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  const int i = 6;
  const double t_prev = grid.t(i - 1), t_next = grid.t(i);
  const double threshold = fpi_lipschitz_threshold(s, t_prev, t_next);
  const double omega = 2.0;
  Rng rng(15);
  const Vec mu_c = rng.gaussian_vec(6), mu_u = rng.gaussian_vec(6);

  // constituents sized so the guided model sits at twice the threshold
  const double gain = 2.0 * threshold / (2.0 * omega - 1.0);
  auto cond = gaussian_with_gain(s, t_prev, gain, mu_c);
  auto uncond = gaussian_with_gain(s, t_prev, gain, mu_u);
  GuidedModel guided(omega, cond, uncond);

  // single-transition inversion target
  const Vec x_prev = rng.gaussian_vec(6);
  const Vec x_next = ddim_step(guided, s, x_prev, t_prev, t_next);

  // FPI residual doubles per iteration; the pair sits mid-grid, so iterate
  // the operator by hand through the public residual() surface
  const auto vp = s.eval(t_prev), vn = s.eval(t_next);
  const double coeff = (vp.sigma / vn.sigma) * vn.alpha * (std::exp(-(vn.lambda - vp.lambda)) - 1.0);
  Vec z = scaled(vp.sigma / vn.sigma, x_next);  // arbitrary start away from the fixed point
  std::vector<double> history;
  for (int k = 0; k < 11; ++k) {
    const auto res = residual(guided, s, z, x_next, t_prev, t_next);
    history.push_back(norm2(res.r));
    Vec pred = guided.evaluate(z, t_prev);
    z = axpby(vp.sigma / vn.sigma, x_next, coeff, pred);
  }
  CHECK(history[10] >= 10.0 * history[0]);
  for (int k = 1; k <= 10; ++k) CHECK(history[k] > history[k - 1]);

  // forward step with some swept rho converges on the same transition
  bool recovered = false;
  for (double rho : {0.5, 0.25, 0.1, 0.05}) {
    Vec cand = naive_invert_step(guided, s, x_next, t_next, t_prev);
    bool conv = false;
    for (int k = 0; k < 500 && !conv; ++k) {
      const auto res = residual(guided, s, cand, x_next, t_prev, t_next);
      conv = norm2(res.r) / std::max(norm2(x_next), 1e-12) <= 1e-9;
      add_scaled(cand, -rho, res.r);
    }
    if (conv) {
      recovered = true;
      CHECK(nmse(x_prev, cand) <= 1e-12);
      break;
    }
  }
  CHECK(recovered);
}

TEST_CASE("fpi divergence guard flags the failing run") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(16);
  const Vec mu_c = rng.gaussian_vec(4), mu_u = rng.gaussian_vec(4);
  auto cond = std::make_shared<GaussianDenoiser>(s, mu_c, 0.25);
  auto uncond = std::make_shared<GaussianDenoiser>(s, mu_u, 0.25);
  GuidedModel guided(7.5, cond, uncond);
  const Vec xT = rng.gaussian_vec(4);
  const Vec x0 = sample(guided, s, grid, xT, SolverKind::Ddim).states.back();
  const auto report = fpi_invert(guided, s, grid, x0, InversionConfig::fpi());
  CHECK(report.any_diverged());
  CHECK_FALSE(report.all_converged());
}

TEST_CASE("nonexpansiveness holds exactly at the stability threshold") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  const int i = 6;
  const double t_prev = grid.t(i - 1), t_next = grid.t(i);
  const double threshold = fpi_lipschitz_threshold(s, t_prev, t_next);
  const double omega = 2.0;
  Rng rng(17);

  const double gain = threshold / (2.0 * omega - 1.0);
  auto cond = gaussian_with_gain(s, t_prev, gain, rng.gaussian_vec(4));
  auto uncond = gaussian_with_gain(s, t_prev, gain, rng.gaussian_vec(4));
  GuidedModel at_threshold(omega, cond, uncond);
  CHECK(guided_lipschitz_bound(at_threshold, t_prev) ==
        doctest::Approx(threshold).epsilon(1e-12));
  CHECK(check_nonexpansive(at_threshold, s, t_prev, t_next, 1000, 4, 18));

  // tiny Lipschitz constant: safely contractive
  auto small = gaussian_with_gain(s, t_prev, 0.01 * threshold, rng.gaussian_vec(4));
  GuidedModel contractive(1.0, small, small);
  CHECK(check_nonexpansive(contractive, s, t_prev, t_next, 1000, 4, 19));

  // doubled constant: any probe pair exposes the expansion (affine model,
  // every direction is the top singular direction)
  auto big_c = gaussian_with_gain(s, t_prev, 2.0 * gain, rng.gaussian_vec(4));
  GuidedModel expanding(omega, big_c, big_c);
  CHECK_FALSE(check_nonexpansive(expanding, s, t_prev, t_next, 4, 4, 20));
}

TEST_CASE("update rule step schedules") {
  const UpdateRule constant = UpdateRule::forward_step();
  CHECK(constant.step_for(10) == 0.5);
  CHECK(constant.step_for(1) == 0.5);
  const UpdateRule decaying = UpdateRule::forward_step_decaying();
  CHECK(decaying.step_for(10) == doctest::Approx(1.0));
  CHECK(decaying.step_for(4) == doctest::Approx(2.5));
  CHECK(decaying.step_for(1) == doctest::Approx(1.0));  // closing step
  const UpdateRule gd = UpdateRule::gradient_descent();
  CHECK(gd.initial_step == 0.1);
  CHECK(gd.halving_window == 5);
  CHECK(gd.min_step == 1e-3);
}

TEST_CASE("halving rescues an oversized forward step") {
  const NoiseSchedule s = default_schedule();
  const TimeGrid grid = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
  Rng rng(21);
  GaussianDenoiser g(s, rng.gaussian_vec(4), 1.0);
  const Vec xT = rng.gaussian_vec(4);
  const Vec x0 = sample(g, s, grid, xT, SolverKind::Ddim).states.back();
  UpdateRule rule = UpdateRule::forward_step();
  rule.initial_step = 3.0;  // beyond the stable range; halving must recover
  const auto report = backward_euler_invert(g, s, grid, x0, InversionConfig::backward_euler(rule));
  CHECK(report.all_converged());
  CHECK(nmse(xT, report.x_hat) <= 1e-10);
}
