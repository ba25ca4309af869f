#include "dpminv/metrics.hpp"

#include <stdexcept>

#include "dpminv/kernels.hpp"

namespace dpminv {

double nmse(const Vec& x, const Vec& xhat) {
  if (x.size() != xhat.size()) throw std::invalid_argument("nmse: size mismatch");
  const double ref = kern::sum_sq(x.data(), x.size());
  if (ref <= 0.0) throw std::invalid_argument("nmse: zero-norm reference");
  return kern::sq_dist(x.data(), xhat.data(), x.size()) / ref;
}

double nmae(const Vec& x, const Vec& xhat) {
  if (x.size() != xhat.size()) throw std::invalid_argument("nmae: size mismatch");
  const double ref = kern::sum_abs(x.data(), x.size());
  if (ref <= 0.0) throw std::invalid_argument("nmae: zero-norm reference");
  return kern::l1_dist(x.data(), xhat.data(), x.size()) / ref;
}

double l1_mean(const Vec& x, const Vec& xhat) {
  if (x.size() != xhat.size()) throw std::invalid_argument("l1_mean: size mismatch");
  if (x.empty()) return 0.0;
  return kern::l1_dist(x.data(), xhat.data(), x.size()) / static_cast<double>(x.size());
}

MetricReport compute_metrics(const Vec& x, const Vec& xhat) {
  return MetricReport{nmse(x, xhat), nmae(x, xhat), l1_mean(x, xhat)};
}

}  // namespace dpminv
