#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpminv/rng.hpp"
#include "dpminv/schedule.hpp"
#include "support/oracles.hpp"

using namespace dpminv;

namespace {

const ScheduleKind kAllKinds[] = {ScheduleKind::UniformLogSnr, ScheduleKind::VpCosine,
                                  ScheduleKind::VpLinearBeta};

}  // namespace

TEST_CASE("variance-preserving identity and lambda definition") {
  Rng rng(101);
  for (ScheduleKind kind : kAllKinds) {
    const NoiseSchedule s = NoiseSchedule::make(kind);
    for (int i = 0; i < 100; ++i) {
      const double t = rng.uniform();
      const auto v = s.eval(t);
      CHECK(v.alpha * v.alpha + v.sigma * v.sigma == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(v.lambda - std::log(v.alpha / v.sigma) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(v.alpha > 0.0);
      CHECK(v.sigma > 0.0);
    }
  }
}

TEST_CASE("lambda strictly decreasing in t") {
  Rng rng(102);
  for (ScheduleKind kind : kAllKinds) {
    const NoiseSchedule s = NoiseSchedule::make(kind);
    for (int i = 0; i < 1000; ++i) {
      double a = s.clamp_eps() + rng.uniform() * (1.0 - 2 * s.clamp_eps());
      double b = s.clamp_eps() + rng.uniform() * (1.0 - 2 * s.clamp_eps());
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(s.lambda(a) > s.lambda(b));
    }
  }
}

TEST_CASE("uniform-logsnr endpoints") {
  ScheduleParams p;
  p.lambda_max = 2.3;
  p.lambda_min = -5.8;
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::UniformLogSnr, p);
  // lambda decreases in t: top of the range near the data end (t -> 0)
  CHECK(s.lambda(0.0) == doctest::Approx(2.3).epsilon(1e-3));
  CHECK(s.lambda(1.0) == doctest::Approx(-5.8).epsilon(1e-3));
}

TEST_CASE("boundary behavior: data end nearly clean, lambda=0 point balanced") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::VpCosine);
  const auto lo = s.eval(0.0);  // clamped to eps
  CHECK(lo.alpha == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(lo.sigma < 0.05);
  const auto mid = s.eval(s.t_of_lambda(0.0));
  CHECK(mid.alpha == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(mid.sigma == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("t_of_lambda agrees with a bisection oracle") {
  for (ScheduleKind kind : kAllKinds) {
    const NoiseSchedule s = NoiseSchedule::make(kind);
    const double lo = s.clamp_eps(), hi = s.T() - s.clamp_eps();
    const double l_hi = s.lambda(lo), l_lo = s.lambda(hi);
    for (double frac : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double target = l_lo + frac * (l_hi - l_lo);
      const double exact = s.t_of_lambda(target);
      const double by_bisection = oracles::bisect_lambda(
          [&](double t) { return s.lambda(t); }, lo, hi, target);
      CHECK(exact == doctest::Approx(by_bisection).epsilon(1e-9));
      CHECK(s.lambda(exact) == doctest::Approx(target).epsilon(1e-10));
    }
  }
}

TEST_CASE("eval rejects out-of-range times; construction validates parameters") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::UniformLogSnr);
  CHECK_THROWS_AS(s.eval(-0.1), std::out_of_range);
  CHECK_THROWS_AS(s.eval(1.1), std::out_of_range);
  ScheduleParams bad;
  bad.lambda_max = -1.0;
  bad.lambda_min = 1.0;
  CHECK_THROWS_AS(NoiseSchedule::make(ScheduleKind::UniformLogSnr, bad),
                  std::invalid_argument);
}

TEST_CASE("uniform-lambda grid has equal h_i") {
  for (ScheduleKind kind : kAllKinds) {
    const NoiseSchedule s = NoiseSchedule::make(kind);
    const TimeGrid g = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
    const double span = g.lambda(10) - g.lambda(0);
    for (int i = 1; i <= 10; ++i) {
      CHECK(g.h(i) > 0.0);
      CHECK(g.h(i) == doctest::Approx(span / 10).epsilon(1e-12));
    }
    for (int i = 2; i <= 10; ++i) CHECK(g.r(i) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("uniform-t grid keeps h_i positive") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::VpCosine);
  const TimeGrid g = TimeGrid::make(s, 50, GridSpacing::UniformT);
  for (int i = 1; i <= 50; ++i) CHECK(g.h(i) > 0.0);
}

TEST_CASE("degenerate single-step grid") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::UniformLogSnr);
  const TimeGrid g = TimeGrid::make(s, 1, GridSpacing::UniformLambda);
  CHECK(g.steps() == 1);
  CHECK(g.t(0) == doctest::Approx(s.T() - s.clamp_eps()));
  CHECK(g.t(1) == doctest::Approx(s.clamp_eps()));
  CHECK_THROWS_AS(TimeGrid::make(s, 0, GridSpacing::UniformLambda), std::invalid_argument);
}

TEST_CASE("fractional times reproduce grid points at integer indices") {
  for (ScheduleKind kind : kAllKinds) {
    const NoiseSchedule s = NoiseSchedule::make(kind);
    const TimeGrid g = TimeGrid::make(s, 10, GridSpacing::UniformLambda);
    for (int J : {1, 4, 10}) {
      for (int i = 2; i <= 10; i += 3) {
        CHECK(g.fractional_t(i, 0, J) == g.t(i));
        CHECK(g.fractional_t(i, J, J) == g.t(i - 1));
        CHECK(g.fractional_t(i, 2 * J, J) == g.t(i - 2));
      }
    }
  }
}

TEST_CASE("fractional times interpolate uniformly in lambda") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::VpCosine);
  const TimeGrid g = TimeGrid::make(s, 10, GridSpacing::UniformT);
  const int J = 5, i = 6;
  const double dl1 = (g.lambda(i - 1) - g.lambda(i)) / J;
  for (int j = 1; j <= J; ++j) {
    const double lam = s.lambda(g.fractional_t(i, j, J));
    CHECK(lam == doctest::Approx(g.lambda(i) + j * dl1).epsilon(1e-10));
  }
  const double dl2 = (g.lambda(i - 2) - g.lambda(i - 1)) / J;
  for (int j = J + 1; j < 2 * J; ++j) {
    const double lam = s.lambda(g.fractional_t(i, j, J));
    CHECK(lam == doctest::Approx(g.lambda(i - 1) + (j - J) * dl2).epsilon(1e-10));
  }
  // times increase with j within the window (moving toward noise)
  for (int j = 1; j <= 2 * J; ++j) {
    CHECK(g.fractional_t(i, j, J) > g.fractional_t(i, j - 1, J));
  }
}

TEST_CASE("mid-grid eval cross-check for the cosine schedule") {
  const NoiseSchedule s = NoiseSchedule::make(ScheduleKind::VpCosine);
  const double theta = (0.4 + 0.008) / 1.008 * 3.14159265358979323846 / 2.0;
  const auto v = s.eval(0.4);
  CHECK(v.alpha == doctest::Approx(std::cos(theta)).epsilon(1e-12));
  CHECK(s.t_of_lambda(v.lambda) == doctest::Approx(0.4).epsilon(1e-10));
}
