#pragma once

#include "dpminv/vec.hpp"

namespace dpminv {

struct MetricReport {
  double nmse = 0.0;
  double nmae = 0.0;
  double l1_mean = 0.0;
};

// ||x - xhat||_2^2 / ||x||_2^2; throws on zero-norm reference.
double nmse(const Vec& x, const Vec& xhat);

// ||x - xhat||_1 / ||x||_1; throws on zero-norm reference.
double nmae(const Vec& x, const Vec& xhat);

// mean_i |x_i - xhat_i|
double l1_mean(const Vec& x, const Vec& xhat);

MetricReport compute_metrics(const Vec& x, const Vec& xhat);

}  // namespace dpminv
