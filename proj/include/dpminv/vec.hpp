#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpminv/kernels.hpp"

namespace dpminv {

using Vec = std::vector<double>;

inline Vec axpby(double a, const Vec& x, double b, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpby: size mismatch");
  Vec out(x.size());
  kern::axpby(a, x.data(), b, y.data(), out.data(), x.size());
  return out;
}

inline void add_scaled(Vec& y, double a, const Vec& x) {
  if (x.size() != y.size()) throw std::invalid_argument("add_scaled: size mismatch");
  kern::axpy(a, x.data(), y.data(), x.size());
}

inline Vec scaled(double a, const Vec& x) {
  Vec out(x.size());
  kern::axpby(a, x.data(), 0.0, x.data(), out.data(), x.size());
  return out;
}

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  return kern::dot(x.data(), y.data(), x.size());
}

inline double norm2(const Vec& x) {
  return std::sqrt(kern::sum_sq(x.data(), x.size()));
}

inline double dist2(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dist2: size mismatch");
  return std::sqrt(kern::sq_dist(x.data(), y.data(), x.size()));
}

inline bool all_finite(const Vec& x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace dpminv
