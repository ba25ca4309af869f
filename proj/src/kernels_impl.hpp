#pragma once

#include <cstddef>

namespace dpminv::kern {

struct KernelTable {
  void (*axpby)(double, const double*, double, const double*, double*,
                std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_sq)(const double*, std::size_t);
  double (*sq_dist)(const double*, const double*, std::size_t);
  double (*sq_dist_scaled)(const double*, const double*, double, std::size_t);
  double (*l1_dist)(const double*, const double*, std::size_t);
  double (*sum_abs)(const double*, std::size_t);
};

const KernelTable& scalar_table();

// Returns nullptr when the build has no AVX2 translation unit.
const KernelTable* avx2_table();

}  // namespace dpminv::kern
