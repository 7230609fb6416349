#pragma once

// Data-parallel inner loops used by the filter and the LSTM.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from CPUID; the
// HERDTWIN_ISA environment variable ("scalar" or "avx2") overrides it.
// Variants are not bit-identical (FMA rounds once), but each is
// deterministic, and tests hold them to a tight relative tolerance.

#include <cstddef>
#include <string_view>

namespace herdtwin::simd {

enum class Isa { Scalar, Avx2 };

// Row-major matrix views with an explicit leading dimension.
struct ConstMatrixView {
  const double* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;

  const double* row(std::size_t r) const { return data + r * stride; }
};

struct MatrixView {
  double* data;
  std::size_t rows;
  std::size_t cols;
  std::size_t stride;

  double* row(std::size_t r) const { return data + r * stride; }
  operator ConstMatrixView() const { return {data, rows, cols, stride}; }
};

struct KernelTable {
  // c += a * b        a: m x k, b: k x n, c: m x n
  void (*gemm_nn)(ConstMatrixView a, ConstMatrixView b, MatrixView c);
  // c += a^T * b      a: k x m, b: k x n, c: m x n
  void (*gemm_tn)(ConstMatrixView a, ConstMatrixView b, MatrixView c);
  // c += a * b^T      a: m x k, b: n x k, c: m x n
  void (*gemm_nt)(ConstMatrixView a, ConstMatrixView b, MatrixView c);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = sum_k taps[k] * padded[i + k], i in [0, n)
  void (*correlate)(const double* taps, std::size_t n_taps, const double* padded, double* out, std::size_t n);
  // Fused LSTM gate nonlinearity over one row of pre-activations laid out
  // [i | f | g | o] (each `hidden` wide): sigmoid on i, f, o and tanh on g,
  // in place.
  void (*gate_activations)(double* z, std::size_t hidden);
};

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

Isa active_isa();
bool isa_available(Isa isa);
std::string_view isa_name(Isa isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace herdtwin::simd
