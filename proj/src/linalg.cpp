#include "mfbwalk/linalg.hpp"

#include "mfbwalk/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mfbwalk::linalg {

std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                      std::span<const double> diag,
                                      std::span<const double> super,
                                      std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (sub.size() != n || super.size() != n || rhs.size() != n)
    throw std::invalid_argument("solve_tridiagonal: band size mismatch");
  if (n == 0)
    return {};

  std::vector<double> c(n), x(n);
  double pivot = diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot))
    throw SingularSystem("solve_tridiagonal: zero pivot at row 0");
  c[0] = super[0] / pivot;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot))
      throw SingularSystem("solve_tridiagonal: zero pivot at row " +
                           std::to_string(i));
    c[i] = super[i] / pivot;
    x[i] = (rhs[i] - sub[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;)
    x[i] -= c[i] * x[i + 1];
  return x;
}

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                std::size_t n) {
  if (a.size() != n * n || b.size() != n)
    throw std::invalid_argument("solve_dense: size mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::abs(a[row * n + col]) > std::abs(a[best * n + col]))
        best = row;
    if (a[best * n + col] == 0.0)
      throw SingularSystem("solve_dense: singular matrix");
    if (best != col) {
      for (std::size_t k = 0; k < n; ++k)
        std::swap(a[col * n + k], a[best * n + k]);
      std::swap(b[col], b[best]);
    }
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / a[col * n + col];
      if (f == 0.0)
        continue;
      for (std::size_t k = col; k < n; ++k)
        a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k)
      s -= a[i * n + k] * x[k];
    x[i] = s / a[i * n + i];
  }
  return x;
}

} // namespace mfbwalk::linalg
