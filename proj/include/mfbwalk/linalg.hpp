#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfbwalk::linalg {

/// Solves a tridiagonal system by forward elimination and back substitution
/// (no pivoting; the matrix must be diagonally dominant by rows or columns).
/// sub[i] couples row i to i-1 (sub[0] unused); super[i] couples row i to i+1
/// (super[n-1] unused). Throws SingularSystem on a vanishing pivot.
std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                      std::span<const double> diag,
                                      std::span<const double> super,
                                      std::span<const double> rhs);

/// Dense row-major n x n solve with partial pivoting.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                std::size_t n);

} // namespace mfbwalk::linalg
