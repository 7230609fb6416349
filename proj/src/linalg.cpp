#include "herdtwin/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "herdtwin/error.hpp"

namespace herdtwin::linalg {

std::vector<double> least_squares(Matrix a, std::vector<double> b, double rank_tolerance) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m) throw Error(ErrorCode::ShapeMismatch, "least_squares: rhs length differs from row count");
  if (m < n) throw Error(ErrorCode::SingularSystem, "least_squares: fewer equations than unknowns");

  // Equilibrate columns to unit norm; undone on the solution.
  std::vector<double> scale(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm = std::hypot(norm, a(i, j));
    if (norm == 0.0 || !std::isfinite(norm)) throw Error(ErrorCode::SingularSystem, "least_squares: degenerate column");
    scale[j] = 1.0 / norm;
    for (std::size_t i = 0; i < m; ++i) a(i, j) *= scale[j];
  }

  std::vector<double> diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm = std::hypot(norm, a(i, k));
    const double alpha = a(k, k) > 0 ? -norm : norm;
    diag[k] = alpha;
    if (norm == 0.0) continue;
    // v = x - alpha e1, stored in place below the diagonal.
    a(k, k) -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) vnorm2 += a(i, k) * a(i, k);
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = k + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += a(i, k) * a(i, j);
      s = 2.0 * s / vnorm2;
      for (std::size_t i = k; i < m; ++i) a(i, j) -= s * a(i, k);
    }
    double s = 0.0;
    for (std::size_t i = k; i < m; ++i) s += a(i, k) * b[i];
    s = 2.0 * s / vnorm2;
    for (std::size_t i = k; i < m; ++i) b[i] -= s * a(i, k);
  }

  double largest = 0.0;
  for (const double d : diag) largest = std::max(largest, std::abs(d));
  for (std::size_t k = 0; k < n; ++k) {
    if (!(std::abs(diag[k]) > rank_tolerance * largest)) {
      throw Error(ErrorCode::SingularSystem, "least_squares: rank-deficient system");
    }
  }

  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / diag[k];
  }
  for (std::size_t j = 0; j < n; ++j) x[j] *= scale[j];
  return x;
}

}  // namespace herdtwin::linalg
