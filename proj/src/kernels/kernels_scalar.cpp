// Scalar reference kernels. These define the semantics the SIMD variants
// are tested against; keep them plain.

#include <cmath>

#include "herdtwin/simd/kernels.hpp"

namespace herdtwin::simd {
namespace {

void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  for (std::size_t i = 0; i < c.rows; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < c.cols; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  for (std::size_t i = 0; i < c.rows; ++i) {
    double* ci = c.row(i);
    for (std::size_t p = 0; p < a.rows; ++p) {
      const double api = a.row(p)[i];
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < c.cols; ++j) ci[j] += api * bp[j];
    }
  }
}

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  for (std::size_t i = 0; i < c.rows; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < c.cols; ++j) {
      const double* bj = b.row(j);
      double sum = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) sum += ai[p] * bj[p];
      ci[j] += sum;
    }
  }
}

double dot(const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void correlate(const double* taps, std::size_t n_taps, const double* padded, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) sum += taps[k] * padded[i + k];
    out[i] = sum;
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void gate_activations(double* z, std::size_t hidden) {
  for (std::size_t j = 0; j < 2 * hidden; ++j) z[j] = sigmoid(z[j]);
  for (std::size_t j = 2 * hidden; j < 3 * hidden; ++j) z[j] = std::tanh(z[j]);
  for (std::size_t j = 3 * hidden; j < 4 * hidden; ++j) z[j] = sigmoid(z[j]);
}

constexpr KernelTable kScalar{gemm_nn, gemm_tn, gemm_nt, dot, axpy, correlate, gate_activations};

}  // namespace

namespace detail {
const KernelTable& scalar_table() { return kScalar; }
}  // namespace detail

}  // namespace herdtwin::simd
