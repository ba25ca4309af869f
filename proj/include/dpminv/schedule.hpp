#pragma once

#include <vector>

namespace dpminv {

enum class ScheduleKind { VpCosine, VpLinearBeta, UniformLogSnr };

struct ScheduleParams {
  double T = 1.0;
  // UniformLogSnr
  double lambda_max = 2.3;
  double lambda_min = -5.8;
  // VpLinearBeta
  double beta_min = 0.1;
  double beta_max = 20.0;
  // VpCosine
  double cosine_s = 0.008;
};

struct ScheduleValues {
  double alpha;
  double sigma;
  double lambda;
};

/// Variance-preserving noise schedule: alpha(t)^2 + sigma(t)^2 = 1 and
/// lambda(t) = log(alpha/sigma) strictly decreasing in t. Evaluation
/// clamps t into [eps, T-eps] with eps = 1e-4*T so that alpha and sigma
/// stay strictly positive.
class NoiseSchedule {
 public:
  static NoiseSchedule make(ScheduleKind kind, const ScheduleParams& params = {});

  ScheduleValues eval(double t) const;  // throws std::out_of_range outside [0, T]
  double lambda(double t) const;
  double t_of_lambda(double lam) const;  // closed form per kind

  ScheduleKind kind() const { return kind_; }
  double T() const { return params_.T; }
  double clamp_eps() const { return eps_; }
  const ScheduleParams& params() const { return params_; }

 private:
  NoiseSchedule(ScheduleKind kind, const ScheduleParams& params);
  double clamp_t(double t) const;

  ScheduleKind kind_;
  ScheduleParams params_;
  double eps_;
};

enum class GridSpacing { UniformT, UniformLambda };

/// Discrete times t_0 > t_1 > ... > t_M with t_0 at the noise end and
/// t_M at the data end; lambda(t_i) is strictly increasing in i.
class TimeGrid {
 public:
  static TimeGrid make(const NoiseSchedule& schedule, int steps, GridSpacing spacing);

  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double t(int i) const { return times_.at(i); }
  double lambda(int i) const { return lambdas_.at(i); }
  // h_i = lambda(t_i) - lambda(t_{i-1}), i = 1..M (positive)
  double h(int i) const;
  // r_i = h_{i-1} / h_i, i = 2..M (positive)
  double r(int i) const;

  // Fractional time t_{i - j/J} for j = 0..2J, defined by uniform
  // interpolation in lambda within each coarse interval. Integer points
  // (j = 0, J, 2J) return the stored grid times exactly.
  double fractional_t(int i, int j, int J) const;

  const std::vector<double>& times() const { return times_; }
  const NoiseSchedule& schedule() const { return schedule_; }

 private:
  TimeGrid(const NoiseSchedule& schedule, std::vector<double> times);

  NoiseSchedule schedule_;
  std::vector<double> times_;
  std::vector<double> lambdas_;
};

}  // namespace dpminv
