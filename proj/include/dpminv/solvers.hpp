#pragma once

#include <vector>

#include "dpminv/models.hpp"
#include "dpminv/schedule.hpp"
#include "dpminv/vec.hpp"

namespace dpminv {

enum class SolverKind { Ddim, Dpmpp2m };

struct Trajectory {
  TimeGrid grid;
  std::vector<Vec> states;  // states[i] at grid.t(i); 0 = noise end, M = data end
};

/// One DDIM step in the sampling direction (lambda increases):
///   (sigma_next/sigma_prev) x - alpha_next (e^{-h} - 1) model(x, t_prev),
/// h = lambda(t_next) - lambda(t_prev). If pred_out is non-null the model
/// evaluation is written there for caching.
Vec ddim_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
              const Vec& x_prev, double t_prev, double t_next,
              Vec* pred_out = nullptr);

/// One DPM-Solver++(2M) step. pred_prevprev is the cached model output at
/// (x_{t_{i-2}}, t_{i-2}); the model is evaluated once, at (x_prev, t_prev).
/// The two predictions combine with weights (1 + 1/(2r)) and -1/(2r),
/// r = h_{i-1}/h_i.
Vec dpmpp2m_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
                 const Vec& x_prev, const Vec& pred_prevprev, double t_prevprev,
                 double t_prev, double t_next, Vec* pred_out = nullptr);

/// Full trajectory from x_T at grid.t(0) down to data at grid.t(M).
/// For Dpmpp2m the first transition is a DDIM step.
Trajectory sample(const DataPredictionModel& model, const NoiseSchedule& schedule,
                  const TimeGrid& grid, const Vec& x_T, SolverKind kind);

/// DDIM on an n_fine uniform-lambda grid (n_fine >= 1000); proxy for the
/// underlying ODE solution in diagnostics.
Trajectory reference_trajectory(const DataPredictionModel& model,
                                const NoiseSchedule& schedule, const Vec& x_T,
                                int n_fine = 2000);

}  // namespace dpminv
