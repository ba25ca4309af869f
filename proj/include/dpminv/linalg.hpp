#pragma once

#include <vector>

#include "dpminv/vec.hpp"

// Small dense helpers for the problem sizes this library works at
// (dimensions up to a few hundred). Row-major storage throughout.
namespace dpminv::linalg {

// Solves A x = b by LU with partial pivoting; A is n x n row-major.
// Throws std::runtime_error on a numerically singular matrix.
Vec lu_solve(std::vector<double> a, Vec b, int n);

// Solves S x = b for symmetric positive definite S via Cholesky.
Vec cholesky_solve(std::vector<double> s, Vec b, int n);

// Eigenvalues of a symmetric n x n matrix by the cyclic Jacobi method,
// ascending order.
std::vector<double> sym_eigenvalues(std::vector<double> s, int n);

// Moore-Penrose pseudoinverse of a full-column-rank m x n matrix (m >= n):
// (A^T A)^{-1} A^T, returned as n x m row-major.
std::vector<double> pinv_full_rank(const std::vector<double>& a, int m, int n);

// y = A x for an m x n row-major matrix.
Vec matvec(const std::vector<double>& a, const Vec& x, int m, int n);

// y = A^T x for an m x n row-major matrix.
Vec matvec_t(const std::vector<double>& a, const Vec& x, int m, int n);

}  // namespace dpminv::linalg
