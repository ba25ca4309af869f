#pragma once

#include <complex>
#include <vector>

#include "dpminv/vec.hpp"

namespace dpminv {

using Cplx = std::complex<double>;
using CField = std::vector<Cplx>;  // row-major n x n

/// In-place radix-2 Cooley-Tukey transform; n must be a power of two.
/// Forward is unnormalized; inverse divides by n.
void fft_inplace(Cplx* a, std::size_t n, bool inverse);

CField fft2(const CField& field, int n);
CField ifft2(const CField& field, int n);
CField fft2_real(const Vec& field, int n);

bool is_power_of_two(int n);

}  // namespace dpminv
