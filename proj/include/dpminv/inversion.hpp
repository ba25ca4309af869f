#pragma once

#include <cstdint>
#include <vector>

#include "dpminv/models.hpp"
#include "dpminv/schedule.hpp"
#include "dpminv/solvers.hpp"
#include "dpminv/vec.hpp"

namespace dpminv {

/// Iteration control for the implicit per-step solves. The base step is
/// halved (never below min_step) whenever the best residual over the last
/// halving_window iterations fails to improve; during warmup the effective
/// step ramps linearly from zero up to the base value.
struct UpdateRule {
  enum class Kind { GradientDescent, ForwardStep };
  enum class StepSchedule { Constant, InverseIndex };

  Kind kind = Kind::ForwardStep;
  StepSchedule schedule = StepSchedule::Constant;
  double initial_step = 0.5;
  // InverseIndex: numerator / coarse_index for indices >= 2, closing_step at 1
  double inverse_index_numerator = 10.0;
  double closing_step = 1.0;
  int halving_window = 20;
  double min_step = 1e-4;
  int warmup_steps = 20;

  double step_for(int coarse_index) const;

  static UpdateRule gradient_descent();        // lr 0.1, window 5, floor 1e-3
  static UpdateRule forward_step();            // rho 0.5, window 20, warmup 20
  static UpdateRule forward_step_decaying();   // 10/i with closing step 1
};

struct InversionConfig {
  enum class Method { Naive, BackwardEulerDdim, HighOrder2m, Fpi };

  Method method = Method::BackwardEulerDdim;
  int naive_steps = 1000;  // grid resolution for Method::Naive
  int substeps = 10;       // J, fine substeps per coarse interval (HighOrder2m)
  UpdateRule update;
  double tol = 1e-9;  // relative residual ||z' - target|| / max(||target||, 1e-12)
  int max_iters = 500;

  static InversionConfig naive(int steps);
  static InversionConfig backward_euler(UpdateRule update = UpdateRule::forward_step());
  static InversionConfig high_order_2m(int substeps = 10,
                                       UpdateRule update = UpdateRule::forward_step_decaying());
  static InversionConfig fpi(int max_iters = 500);
};

struct StepSolveRecord {
  int coarse_index = 0;  // i of the transition t_i -> t_{i-1} being inverted
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  bool diverged = false;
  std::vector<double> residual_history;
};

struct InversionReport {
  Vec x_hat;                          // recovered noise-end state
  std::vector<StepSolveRecord> steps; // in inversion order (i = M .. 1)
  double wall_time_sec = 0.0;

  bool all_converged() const;
  bool any_diverged() const;
};

/// Explicit inversion reusing the current state's prediction: for
/// i = M..1 applies
///   (sigma_{i-1}/sigma_i) (x + alpha_i (e^{-h_i} - 1) model(x, t_{i-1})).
Vec naive_ddim_invert(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const TimeGrid& grid, const Vec& x_0);

/// One explicit inversion step from the data-side time t_src up to
/// t_dst (t_dst > t_src).
Vec naive_invert_step(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const Vec& x, double t_src, double t_dst);

struct StepResidual {
  Vec z_next;  // forward step applied to the candidate
  Vec r;       // z_next - target
};

/// Forward step of the candidate preimage and its residual against the
/// observed state.
StepResidual residual(const DataPredictionModel& model, const NoiseSchedule& schedule,
                      const Vec& z_prev_candidate, const Vec& z_next_target,
                      double t_prev, double t_next);

/// Implicit inversion of DDIM: per coarse step, initialize with one naive
/// step and iterate the chosen update until the relative residual reaches
/// config.tol. Non-convergence is reported, not thrown.
InversionReport backward_euler_invert(const DataPredictionModel& model,
                                      const NoiseSchedule& schedule,
                                      const TimeGrid& grid, const Vec& x_0,
                                      const InversionConfig& config);

/// Implicit inversion of DPM-Solver++(2M): per coarse step, 2J fine
/// explicit substeps estimate the two past states feeding the high-order
/// term, which stays frozen while the backward-Euler iteration runs; the
/// final transition is a first-order implicit step.
InversionReport invert_dpmpp2m(const DataPredictionModel& model,
                               const NoiseSchedule& schedule, const TimeGrid& grid,
                               const Vec& x_0, const InversionConfig& config);

/// Fixed-point iteration baseline: z <- F(z) per coarse step. Divergence
/// (residual above 1e6 times its initial value) terminates the step early
/// and is flagged in the report.
InversionReport fpi_invert(const DataPredictionModel& model, const NoiseSchedule& schedule,
                           const TimeGrid& grid, const Vec& x_0,
                           const InversionConfig& config);

/// Largest model Lipschitz constant for which the fixed-point operator of
/// the (t_prev, t_next) transition is nonexpansive:
///   sigma_next / (sigma_prev * alpha_next * |e^{-h} - 1|).
double fpi_lipschitz_threshold(const NoiseSchedule& schedule, double t_prev,
                               double t_next);

/// Samples n_probes random pairs and checks ||F(a)-F(b)|| <= ||a-b||
/// (up to 1e-9 relative slack) for the fixed-point operator of the given
/// transition.
bool check_nonexpansive(const DataPredictionModel& model, const NoiseSchedule& schedule,
                        double t_prev, double t_next, int n_probes, int dim,
                        std::uint64_t seed);

}  // namespace dpminv
