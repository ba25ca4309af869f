#include "dpminv/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace dpminv {

namespace {

constexpr double kPi = 3.14159265358979323846;

// alpha^2 = sigmoid(2*lambda) under the VP constraint alpha^2 + sigma^2 = 1.
ScheduleValues values_from_lambda(double lam) {
  // evaluate the stable branch to avoid overflow at extreme lambda
  double a2;
  if (lam >= 0) {
    const double e = std::exp(-2.0 * lam);
    a2 = 1.0 / (1.0 + e);
  } else {
    const double e = std::exp(2.0 * lam);
    a2 = e / (1.0 + e);
  }
  return ScheduleValues{std::sqrt(a2), std::sqrt(1.0 - a2), lam};
}

}  // namespace

NoiseSchedule::NoiseSchedule(ScheduleKind kind, const ScheduleParams& params)
    : kind_(kind), params_(params), eps_(1e-4 * params.T) {}

NoiseSchedule NoiseSchedule::make(ScheduleKind kind, const ScheduleParams& params) {
  if (params.T <= 0.0) throw std::invalid_argument("schedule: T must be positive");
  switch (kind) {
    case ScheduleKind::UniformLogSnr:
      if (!(params.lambda_max > params.lambda_min))
        throw std::invalid_argument("schedule: lambda_max must exceed lambda_min");
      break;
    case ScheduleKind::VpLinearBeta:
      if (!(params.beta_max > params.beta_min) || params.beta_min < 0.0)
        throw std::invalid_argument("schedule: need beta_max > beta_min >= 0");
      if (params.beta_min == 0.0 && params.beta_max == 0.0)
        throw std::invalid_argument("schedule: degenerate beta range");
      break;
    case ScheduleKind::VpCosine:
      if (params.cosine_s <= 0.0)
        throw std::invalid_argument("schedule: cosine_s must be positive");
      break;
  }
  return NoiseSchedule(kind, params);
}

double NoiseSchedule::clamp_t(double t) const {
  if (t < eps_) return eps_;
  const double hi = params_.T - eps_;
  return t > hi ? hi : t;
}

double NoiseSchedule::lambda(double t) const {
  t = clamp_t(t);
  switch (kind_) {
    case ScheduleKind::UniformLogSnr:
      return params_.lambda_max +
             (params_.lambda_min - params_.lambda_max) * (t / params_.T);
    case ScheduleKind::VpCosine: {
      // alpha(t) = cos(theta), theta = (t/T + s)/(1 + s) * pi/2
      const double theta = (t / params_.T + params_.cosine_s) /
                           (1.0 + params_.cosine_s) * (kPi / 2.0);
      return std::log(std::cos(theta) / std::sin(theta));
    }
    case ScheduleKind::VpLinearBeta: {
      // log alpha(t) = -(beta_max-beta_min) t^2/(4T) - beta_min t/2
      const double la = -(params_.beta_max - params_.beta_min) * t * t /
                            (4.0 * params_.T) -
                        0.5 * params_.beta_min * t;
      const double a2 = std::exp(2.0 * la);
      return la - 0.5 * std::log1p(-a2);
    }
  }
  throw std::logic_error("schedule: unknown kind");
}

double NoiseSchedule::t_of_lambda(double lam) const {
  switch (kind_) {
    case ScheduleKind::UniformLogSnr:
      return params_.T * (lam - params_.lambda_max) /
             (params_.lambda_min - params_.lambda_max);
    case ScheduleKind::VpCosine: {
      // lambda = log(cot(theta)) => theta = atan(exp(-lambda))
      const double theta = std::atan(std::exp(-lam));
      return params_.T *
             (theta * 2.0 / kPi * (1.0 + params_.cosine_s) - params_.cosine_s);
    }
    case ScheduleKind::VpLinearBeta: {
      // recover log alpha from lambda, then solve the quadratic in t
      double a2;
      if (lam >= 0) {
        a2 = 1.0 / (1.0 + std::exp(-2.0 * lam));
      } else {
        const double e = std::exp(2.0 * lam);
        a2 = e / (1.0 + e);
      }
      const double la = 0.5 * std::log(a2);
      const double qa = (params_.beta_max - params_.beta_min) / (4.0 * params_.T);
      const double qb = 0.5 * params_.beta_min;
      // qa t^2 + qb t + la = 0 with la < 0; positive root
      return (-qb + std::sqrt(qb * qb - 4.0 * qa * la)) / (2.0 * qa);
    }
  }
  throw std::logic_error("schedule: unknown kind");
}

ScheduleValues NoiseSchedule::eval(double t) const {
  if (t < 0.0 || t > params_.T)
    throw std::out_of_range("schedule: t outside [0, T]");
  return values_from_lambda(lambda(t));
}

TimeGrid::TimeGrid(const NoiseSchedule& schedule, std::vector<double> times)
    : schedule_(schedule), times_(std::move(times)) {
  lambdas_.reserve(times_.size());
  for (double t : times_) lambdas_.push_back(schedule_.lambda(t));
  for (std::size_t i = 1; i < lambdas_.size(); ++i) {
    if (!(lambdas_[i] > lambdas_[i - 1]))
      throw std::invalid_argument("grid: lambda not strictly increasing");
  }
}

TimeGrid TimeGrid::make(const NoiseSchedule& schedule, int steps, GridSpacing spacing) {
  if (steps < 1) throw std::invalid_argument("grid: need at least one step");
  const double t0 = schedule.T() - schedule.clamp_eps();  // noise end
  const double tM = schedule.clamp_eps();                 // data end
  std::vector<double> times(steps + 1);
  if (spacing == GridSpacing::UniformT) {
    for (int i = 0; i <= steps; ++i) {
      times[i] = t0 + (tM - t0) * (static_cast<double>(i) / steps);
    }
  } else {
    const double l0 = schedule.lambda(t0);
    const double lM = schedule.lambda(tM);
    for (int i = 1; i < steps; ++i) {
      const double lam = l0 + (lM - l0) * (static_cast<double>(i) / steps);
      times[i] = schedule.t_of_lambda(lam);
    }
    times[0] = t0;
    times[steps] = tM;
  }
  return TimeGrid(schedule, std::move(times));
}

double TimeGrid::h(int i) const {
  if (i < 1 || i > steps()) throw std::out_of_range("grid: h index");
  return lambdas_[i] - lambdas_[i - 1];
}

double TimeGrid::r(int i) const {
  if (i < 2 || i > steps()) throw std::out_of_range("grid: r index");
  return h(i - 1) / h(i);
}

double TimeGrid::fractional_t(int i, int j, int J) const {
  if (J < 1) throw std::invalid_argument("grid: J must be >= 1");
  if (j < 0 || j > 2 * J) throw std::out_of_range("grid: fractional index");
  if (i - (j > J ? 2 : 1) < 0 || i > steps())
    throw std::out_of_range("grid: coarse index");
  if (j == 0) return times_[i];
  if (j == J) return times_[i - 1];
  if (j == 2 * J) return times_[i - 2];
  const double q = static_cast<double>(j) / J;
  double lam;
  if (q < 1.0) {
    lam = lambdas_[i] + q * (lambdas_[i - 1] - lambdas_[i]);
  } else {
    lam = lambdas_[i - 1] + (q - 1.0) * (lambdas_[i - 2] - lambdas_[i - 1]);
  }
  return schedule_.t_of_lambda(lam);
}

}  // namespace dpminv
