// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here may be called unless dispatch confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "herdtwin/simd/kernels.hpp"

namespace herdtwin::simd {
namespace {

// Packed, cache-blocked GEMM. Operands are addressed through (row step,
// column step) pairs so one driver serves the nn, tn and nt layouts.
struct Operand {
  const double* data;
  std::size_t row_step;
  std::size_t col_step;

  double at(std::size_t r, std::size_t c) const { return data[r * row_step + c * col_step]; }
};

constexpr std::size_t kMr = 4;
constexpr std::size_t kNr = 12;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 1020;

// A block (rows x depth) into kMr-row panels, p-major within each panel;
// short panels are zero-padded.
void pack_a(Operand a, std::size_t i0, std::size_t rows, std::size_t p0, std::size_t depth, double* out) {
  for (std::size_t i = 0; i < rows; i += kMr) {
    const std::size_t mr = std::min(kMr, rows - i);
    for (std::size_t p = 0; p < depth; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) *out++ = r < mr ? a.at(i0 + i + r, p0 + p) : 0.0;
    }
  }
}

// B block (depth x cols) into kNr-column strips, p-major within each strip.
void pack_b(Operand b, std::size_t p0, std::size_t depth, std::size_t j0, std::size_t cols, double* out) {
  for (std::size_t j = 0; j < cols; j += kNr) {
    const std::size_t nr = std::min(kNr, cols - j);
    for (std::size_t p = 0; p < depth; ++p) {
      if (nr == kNr && b.col_step == 1) {
        const double* src = b.data + (p0 + p) * b.row_step + j0 + j;
        for (std::size_t q = 0; q < kNr; ++q) out[q] = src[q];
        out += kNr;
      } else {
        for (std::size_t q = 0; q < kNr; ++q) *out++ = q < nr ? b.at(p0 + p, j0 + j + q) : 0.0;
      }
    }
  }
}

// 4 x 12 tile of packed A times packed B, accumulated into c.
inline void micro_kernel(const double* a, const double* b, std::size_t depth, double* c, std::size_t ldc,
                         std::size_t mr, std::size_t nr) {
  __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd(), c02 = _mm256_setzero_pd();
  __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd(), c12 = _mm256_setzero_pd();
  __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd(), c22 = _mm256_setzero_pd();
  __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd(), c32 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < depth; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b);
    const __m256d b1 = _mm256_loadu_pd(b + 4);
    const __m256d b2 = _mm256_loadu_pd(b + 8);
    __m256d av = _mm256_broadcast_sd(a);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    c02 = _mm256_fmadd_pd(av, b2, c02);
    av = _mm256_broadcast_sd(a + 1);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    c12 = _mm256_fmadd_pd(av, b2, c12);
    av = _mm256_broadcast_sd(a + 2);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    c22 = _mm256_fmadd_pd(av, b2, c22);
    av = _mm256_broadcast_sd(a + 3);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
    c32 = _mm256_fmadd_pd(av, b2, c32);
    a += kMr;
    b += kNr;
  }
  alignas(32) double tile[kMr][kNr];
  _mm256_store_pd(tile[0], c00);
  _mm256_store_pd(tile[0] + 4, c01);
  _mm256_store_pd(tile[0] + 8, c02);
  _mm256_store_pd(tile[1], c10);
  _mm256_store_pd(tile[1] + 4, c11);
  _mm256_store_pd(tile[1] + 8, c12);
  _mm256_store_pd(tile[2], c20);
  _mm256_store_pd(tile[2] + 4, c21);
  _mm256_store_pd(tile[2] + 8, c22);
  _mm256_store_pd(tile[3], c30);
  _mm256_store_pd(tile[3] + 4, c31);
  _mm256_store_pd(tile[3] + 8, c32);
  if (nr == kNr) {
    for (std::size_t r = 0; r < mr; ++r) {
      double* row = c + r * ldc;
      for (std::size_t v = 0; v < kNr; v += 4) {
        _mm256_storeu_pd(row + v, _mm256_add_pd(_mm256_loadu_pd(row + v), _mm256_load_pd(tile[r] + v)));
      }
    }
  } else {
    for (std::size_t r = 0; r < mr; ++r) {
      for (std::size_t q = 0; q < nr; ++q) c[r * ldc + q] += tile[r][q];
    }
  }
}

double dot(const double* x, const double* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Few output rows: packing would cost as much as the product itself, so
// stream b directly.
void gemm_thin(Operand a, Operand b, std::size_t depth, MatrixView c) {
  if (b.col_step == 1) {
    for (std::size_t i = 0; i < c.rows; ++i) {
      for (std::size_t p = 0; p < depth; ++p) axpy(a.at(i, p), b.data + p * b.row_step, c.row(i), c.cols);
    }
  } else if (a.col_step == 1 && b.row_step == 1) {
    for (std::size_t i = 0; i < c.rows; ++i) {
      for (std::size_t j = 0; j < c.cols; ++j) c.row(i)[j] += dot(a.data + i * a.row_step, b.data + j * b.col_step, depth);
    }
  } else {
    for (std::size_t i = 0; i < c.rows; ++i) {
      for (std::size_t j = 0; j < c.cols; ++j) {
        double sum = 0.0;
        for (std::size_t p = 0; p < depth; ++p) sum = std::fma(a.at(i, p), b.at(p, j), sum);
        c.row(i)[j] += sum;
      }
    }
  }
}

void gemm_packed(Operand a, Operand b, std::size_t depth, MatrixView c) {
  if (c.rows == 0 || c.cols == 0 || depth == 0) return;
  if (c.rows < 2 * kMr) {
    gemm_thin(a, b, depth, c);
    return;
  }
  thread_local std::vector<double> packed_a;
  thread_local std::vector<double> packed_b;
  for (std::size_t jc = 0; jc < c.cols; jc += kNc) {
    const std::size_t nc = std::min(kNc, c.cols - jc);
    for (std::size_t pc = 0; pc < depth; pc += kKc) {
      const std::size_t kc = std::min(kKc, depth - pc);
      packed_b.resize(((nc + kNr - 1) / kNr) * kNr * kc);
      pack_b(b, pc, kc, jc, nc, packed_b.data());
      for (std::size_t ic = 0; ic < c.rows; ic += kMc) {
        const std::size_t mc = std::min(kMc, c.rows - ic);
        packed_a.resize(((mc + kMr - 1) / kMr) * kMr * kc);
        pack_a(a, ic, mc, pc, kc, packed_a.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const double* bp = packed_b.data() + (jr / kNr) * kNr * kc;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            micro_kernel(packed_a.data() + (ir / kMr) * kMr * kc, bp, kc, c.row(ic + ir) + jc + jr, c.stride,
                         std::min(kMr, mc - ir), std::min(kNr, nc - jr));
          }
        }
      }
    }
  }
}

void gemm_nn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  gemm_packed({a.data, a.stride, 1}, {b.data, b.stride, 1}, a.cols, c);
}

void gemm_tn(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  gemm_packed({a.data, 1, a.stride}, {b.data, b.stride, 1}, a.rows, c);
}

void gemm_nt(ConstMatrixView a, ConstMatrixView b, MatrixView c) {
  gemm_packed({a.data, a.stride, 1}, {b.data, 1, b.stride}, a.cols, c);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum = std::fma(x[i], y[i], sum);
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void correlate(const double* taps, std::size_t n_taps, const double* padded, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < n_taps; ++k) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(taps[k]), _mm256_loadu_pd(padded + i + k), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n_taps; ++k) sum = std::fma(taps[k], padded[i + k], sum);
    out[i] = sum;
  }
}

// exp(x) for |x| <= 708: Cody-Waite reduction by ln 2 and the classic
// rational approximation on [-ln2/2, ln2/2].
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(708.0);
  const __m256d lo = _mm256_set1_pd(-708.0);
  x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_set1_pd(1.26177193074810590878E-4);
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(3.02994407707441961300E-2));
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910E-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_set1_pd(3.00198505138664455042E-6);
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

  // 2^n via the exponent field; n is integral and within [-1022, 1022].
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)), _mm256_castpd_si256(magic));
  ni = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(ni));
}

inline __m256d sigmoid_pd(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  return _mm256_div_pd(one, _mm256_add_pd(one, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), x))));
}

inline __m256d tanh_pd(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d e = exp_pd(_mm256_add_pd(x, x));
  return _mm256_sub_pd(one, _mm256_div_pd(_mm256_set1_pd(2.0), _mm256_add_pd(e, one)));
}

void gate_activations(double* z, std::size_t hidden) {
  auto apply = [](double* p, std::size_t count, auto vec_fn, auto scalar_fn) {
    std::size_t j = 0;
    for (; j + 4 <= count; j += 4) _mm256_storeu_pd(p + j, vec_fn(_mm256_loadu_pd(p + j)));
    for (; j < count; ++j) p[j] = scalar_fn(p[j]);
  };
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  auto th = [](double v) { return std::tanh(v); };
  apply(z, 2 * hidden, sigmoid_pd, sig);
  apply(z + 2 * hidden, hidden, tanh_pd, th);
  apply(z + 3 * hidden, hidden, sigmoid_pd, sig);
}

constexpr KernelTable kAvx2{gemm_nn, gemm_tn, gemm_nt, dot, axpy, correlate, gate_activations};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2; }
}  // namespace detail

}  // namespace herdtwin::simd
