#include "dpminv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpminv::linalg {

Vec lu_solve(std::vector<double> a, Vec b, int n) {
  if (static_cast<int>(b.size()) != n || static_cast<int>(a.size()) != n * n)
    throw std::invalid_argument("lu_solve: bad dimensions");
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int col = 0; col < n; ++col) {
    int p = col;
    double best = std::fabs(a[col * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double v = std::fabs(a[r * n + col]);
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best < 1e-300) throw std::runtime_error("lu_solve: singular matrix");
    if (p != col) {
      for (int c = 0; c < n; ++c) std::swap(a[p * n + c], a[col * n + c]);
      std::swap(b[p], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      a[r * n + col] = 0.0;
      if (f == 0.0) continue;
      for (int c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

Vec cholesky_solve(std::vector<double> s, Vec b, int n) {
  if (static_cast<int>(b.size()) != n || static_cast<int>(s.size()) != n * n)
    throw std::invalid_argument("cholesky_solve: bad dimensions");
  // in-place lower factor
  for (int j = 0; j < n; ++j) {
    double d = s[j * n + j];
    for (int k = 0; k < j; ++k) d -= s[j * n + k] * s[j * n + k];
    if (d <= 0.0) throw std::runtime_error("cholesky_solve: not positive definite");
    const double lj = std::sqrt(d);
    s[j * n + j] = lj;
    for (int i = j + 1; i < n; ++i) {
      double v = s[i * n + j];
      for (int k = 0; k < j; ++k) v -= s[i * n + k] * s[j * n + k];
      s[i * n + j] = v / lj;
    }
  }
  // forward then backward substitution with L, L^T
  for (int i = 0; i < n; ++i) {
    double v = b[i];
    for (int k = 0; k < i; ++k) v -= s[i * n + k] * b[k];
    b[i] = v / s[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double v = b[i];
    for (int k = i + 1; k < n; ++k) v -= s[k * n + i] * b[k];
    b[i] = v / s[i * n + i];
  }
  return b;
}

std::vector<double> sym_eigenvalues(std::vector<double> s, int n) {
  if (static_cast<int>(s.size()) != n * n)
    throw std::invalid_argument("sym_eigenvalues: bad dimensions");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += s[p * n + q] * s[p * n + q];
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = s[p * n + q];
        if (std::fabs(apq) < 1e-30) continue;
        const double app = s[p * n + p], aqq = s[q * n + q];
        const double theta = 0.5 * (aqq - app) / apq;
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double skp = s[k * n + p], skq = s[k * n + q];
          s[k * n + p] = c * skp - sn * skq;
          s[k * n + q] = sn * skp + c * skq;
        }
        for (int k = 0; k < n; ++k) {
          const double spk = s[p * n + k], sqk = s[q * n + k];
          s[p * n + k] = c * spk - sn * sqk;
          s[q * n + k] = sn * spk + c * sqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = s[i * n + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

std::vector<double> pinv_full_rank(const std::vector<double>& a, int m, int n) {
  if (static_cast<int>(a.size()) != m * n || m < n)
    throw std::invalid_argument("pinv_full_rank: bad dimensions");
  // G = A^T A  (n x n)
  std::vector<double> g(n * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) g[r * n + c] += a[i * n + r] * a[i * n + c];
  // columns of the pseudoinverse: solve G y = A^T e_i
  std::vector<double> pinv(n * m, 0.0);
  for (int i = 0; i < m; ++i) {
    Vec rhs(n);
    for (int r = 0; r < n; ++r) rhs[r] = a[i * n + r];
    Vec y = cholesky_solve(g, rhs, n);
    for (int r = 0; r < n; ++r) pinv[r * m + i] = y[r];
  }
  return pinv;
}

Vec matvec(const std::vector<double>& a, const Vec& x, int m, int n) {
  if (static_cast<int>(a.size()) != m * n || static_cast<int>(x.size()) != n)
    throw std::invalid_argument("matvec: bad dimensions");
  Vec y(m, 0.0);
  for (int i = 0; i < m; ++i) y[i] = kern::dot(a.data() + i * n, x.data(), n);
  return y;
}

Vec matvec_t(const std::vector<double>& a, const Vec& x, int m, int n) {
  if (static_cast<int>(a.size()) != m * n || static_cast<int>(x.size()) != m)
    throw std::invalid_argument("matvec_t: bad dimensions");
  Vec y(n, 0.0);
  for (int i = 0; i < m; ++i) kern::axpy(x[i], a.data() + i * n, y.data(), n);
  return y;
}

}  // namespace dpminv::linalg
