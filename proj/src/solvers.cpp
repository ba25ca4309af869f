#include "dpminv/solvers.hpp"

#include <cmath>
#include <stdexcept>

namespace dpminv {

Vec ddim_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
              const Vec& x_prev, double t_prev, double t_next, Vec* pred_out) {
  const auto prev = schedule.eval(t_prev);
  const auto next = schedule.eval(t_next);
  if (t_prev == t_next) {
    if (pred_out) *pred_out = model.evaluate(x_prev, t_prev);
    return x_prev;
  }
  if (!(next.lambda > prev.lambda))
    throw std::invalid_argument("ddim_step: not in the sampling direction");
  const double h = next.lambda - prev.lambda;
  Vec pred = model.evaluate(x_prev, t_prev);
  Vec out = axpby(next.sigma / prev.sigma, x_prev,
                  -next.alpha * (std::exp(-h) - 1.0), pred);
  if (!all_finite(out)) throw std::runtime_error("ddim_step: non-finite state");
  if (pred_out) *pred_out = std::move(pred);
  return out;
}

Vec dpmpp2m_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
                 const Vec& x_prev, const Vec& pred_prevprev, double t_prevprev,
                 double t_prev, double t_next, Vec* pred_out) {
  const auto pp = schedule.eval(t_prevprev);
  const auto prev = schedule.eval(t_prev);
  const auto next = schedule.eval(t_next);
  if (!(next.lambda > prev.lambda && prev.lambda > pp.lambda))
    throw std::invalid_argument("dpmpp2m_step: lambda must be strictly increasing");
  const double h = next.lambda - prev.lambda;
  const double h_prev = prev.lambda - pp.lambda;
  const double r = h_prev / h;
  if (!(r > 0.0)) throw std::invalid_argument("dpmpp2m_step: r <= 0");

  Vec pred = model.evaluate(x_prev, t_prev);
  Vec d = axpby(1.0 + 1.0 / (2.0 * r), pred, -1.0 / (2.0 * r), pred_prevprev);
  Vec out = axpby(next.sigma / prev.sigma, x_prev,
                  -next.alpha * (std::exp(-h) - 1.0), d);
  if (!all_finite(out)) throw std::runtime_error("dpmpp2m_step: non-finite state");
  if (pred_out) *pred_out = std::move(pred);
  return out;
}

Trajectory sample(const DataPredictionModel& model, const NoiseSchedule& schedule,
                  const TimeGrid& grid, const Vec& x_T, SolverKind kind) {
  const int M = grid.steps();
  Trajectory traj{grid, {}};
  traj.states.reserve(M + 1);
  traj.states.push_back(x_T);

  Vec pred_prev;  // model output at (states[i-1], t_{i-1})
  for (int i = 1; i <= M; ++i) {
    const Vec& cur = traj.states.back();
    Vec next;
    if (kind == SolverKind::Ddim || i == 1) {
      next = ddim_step(model, schedule, cur, grid.t(i - 1), grid.t(i), &pred_prev);
    } else {
      Vec pred_cur;
      next = dpmpp2m_step(model, schedule, cur, pred_prev, grid.t(i - 2),
                          grid.t(i - 1), grid.t(i), &pred_cur);
      pred_prev = std::move(pred_cur);
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Trajectory reference_trajectory(const DataPredictionModel& model,
                                const NoiseSchedule& schedule, const Vec& x_T,
                                int n_fine) {
  if (n_fine < 1000)
    throw std::invalid_argument("reference_trajectory: n_fine must be >= 1000");
  TimeGrid grid = TimeGrid::make(schedule, n_fine, GridSpacing::UniformLambda);
  return sample(model, schedule, grid, x_T, SolverKind::Ddim);
}

}  // namespace dpminv
