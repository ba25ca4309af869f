#include "dpminv/kernels.hpp"

#include <atomic>
#include <cmath>

#include "kernels_impl.hpp"

namespace dpminv::kern {

namespace {

void axpby_scalar(double a, const double* x, double b, const double* y,
                  double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double sq_dist_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double sq_dist_scaled_scalar(const double* x, const double* m, double c,
                             std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - c * m[i];
    s += d * d;
  }
  return s;
}

double l1_dist_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

double sum_abs_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

const KernelTable* pick_default() {
  if (const KernelTable* t = avx2_table()) {
    g_backend.store(Backend::Avx2, std::memory_order_relaxed);
    return t;
  }
  g_backend.store(Backend::Scalar, std::memory_order_relaxed);
  return &scalar_table();
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{axpby_scalar,   axpy_scalar,
                             dot_scalar,     sum_sq_scalar,
                             sq_dist_scalar, sq_dist_scaled_scalar,
                             l1_dist_scalar, sum_abs_scalar};
  return t;
}

bool avx2_supported() { return avx2_table() != nullptr; }

Backend active_backend() {
  active();
  return g_backend.load(std::memory_order_relaxed);
}

const char* backend_name() {
  return active_backend() == Backend::Avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
  if (b == Backend::Avx2) {
    if (const KernelTable* t = avx2_table()) {
      g_active.store(t, std::memory_order_release);
      g_backend.store(Backend::Avx2, std::memory_order_relaxed);
      return;
    }
    b = Backend::Scalar;
  }
  g_active.store(&scalar_table(), std::memory_order_release);
  g_backend.store(b, std::memory_order_relaxed);
}

void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n) {
  active().axpby(a, x, b, y, out, n);
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}

double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}

double sum_sq(const double* x, std::size_t n) { return active().sum_sq(x, n); }

double sq_dist(const double* x, const double* y, std::size_t n) {
  return active().sq_dist(x, y, n);
}

double sq_dist_scaled(const double* x, const double* m, double c,
                      std::size_t n) {
  return active().sq_dist_scaled(x, m, c, n);
}

double l1_dist(const double* x, const double* y, std::size_t n) {
  return active().l1_dist(x, y, n);
}

double sum_abs(const double* x, std::size_t n) {
  return active().sum_abs(x, n);
}

}  // namespace dpminv::kern
