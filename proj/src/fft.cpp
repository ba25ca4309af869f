#include "dpminv/fft.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace dpminv {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_size(int n) {
  if (n <= 0 || !is_power_of_two(n))
    throw std::invalid_argument("fft: size must be a power of two");
}

void transform_rows(CField& a, int n, bool inverse) {
  for (int r = 0; r < n; ++r) fft_inplace(a.data() + static_cast<std::size_t>(r) * n, n, inverse);
}

void transpose(CField& a, int n) {
  for (int r = 0; r < n; ++r)
    for (int c = r + 1; c < n; ++c)
      std::swap(a[static_cast<std::size_t>(r) * n + c], a[static_cast<std::size_t>(c) * n + r]);
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(Cplx* a, std::size_t n, bool inverse) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const Cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const Cplx u = a[i + j];
        const Cplx v = w * a[i + j + len / 2];
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
  }
}

CField fft2(const CField& field, int n) {
  check_size(n);
  if (field.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("fft2: field size mismatch");
  CField a = field;
  transform_rows(a, n, false);
  transpose(a, n);
  transform_rows(a, n, false);
  transpose(a, n);
  return a;
}

CField ifft2(const CField& field, int n) {
  check_size(n);
  if (field.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("ifft2: field size mismatch");
  CField a = field;
  transform_rows(a, n, true);
  transpose(a, n);
  transform_rows(a, n, true);
  transpose(a, n);
  return a;
}

CField fft2_real(const Vec& field, int n) {
  check_size(n);
  if (field.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("fft2_real: field size mismatch");
  CField a(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) a[i] = Cplx(field[i], 0.0);
  transform_rows(a, n, false);
  transpose(a, n);
  transform_rows(a, n, false);
  transpose(a, n);
  return a;
}

}  // namespace dpminv
