#pragma once

#include <cstddef>

// Data-parallel inner loops used throughout the library. Scalar reference
// implementations plus an AVX2 variant selected once at runtime; the two are
// equivalence-tested against each other. Elementwise kernels produce bitwise
// identical results on both backends; reductions may differ by accumulation
// order and are compared with a tolerance.
namespace dpminv::kern {

enum class Backend { Scalar, Avx2 };

// out[i] = a*x[i] + b*y[i]
void axpby(double a, const double* x, double b, const double* y, double* out,
           std::size_t n);

// y[i] += a*x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);

// sum_i x[i]^2
double sum_sq(const double* x, std::size_t n);

// sum_i (x[i]-y[i])^2
double sq_dist(const double* x, const double* y, std::size_t n);

// sum_i (x[i]-c*m[i])^2
double sq_dist_scaled(const double* x, const double* m, double c,
                      std::size_t n);

// sum_i |x[i]-y[i]|
double l1_dist(const double* x, const double* y, std::size_t n);

// sum_i |x[i]|
double sum_abs(const double* x, std::size_t n);

bool avx2_supported();
Backend active_backend();
const char* backend_name();

// Overrides the dispatch choice (falls back to Scalar when AVX2 is not
// available). Intended for equivalence tests; not thread-safe against
// concurrent kernel calls.
void set_backend(Backend b);

}  // namespace dpminv::kern
