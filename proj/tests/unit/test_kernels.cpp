#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "herdtwin/random.hpp"
#include "herdtwin/simd/kernels.hpp"

namespace herdtwin::simd {
namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], tol * (1.0 + std::abs(a[i]))) << "index " << i;
  }
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!isa_available(Isa::Avx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const KernelTable& ref = kernels(Isa::Scalar);
  const KernelTable& vec = kernels(Isa::Avx2);
};

struct Shape {
  std::size_t m, k, n;
};

// Thin shapes (fewer than 8 rows) and sizes that exercise packed blocks and
// ragged tails.
const Shape kShapes[] = {{1, 1, 1},  {3, 5, 7},    {7, 4, 12},   {8, 8, 8},     {24, 1, 512},
                         {24, 129, 512}, {33, 65, 17}, {128, 128, 128}, {5, 300, 3}, {64, 2, 37}};

TEST_F(KernelEquivalence, GemmNn) {
  Rng rng(1);
  for (const auto& s : kShapes) {
    const auto a = random_vector(rng, s.m * s.k), b = random_vector(rng, s.k * s.n), c0 = random_vector(rng, s.m * s.n);
    auto c1 = c0, c2 = c0;
    ref.gemm_nn({a.data(), s.m, s.k, s.k}, {b.data(), s.k, s.n, s.n}, {c1.data(), s.m, s.n, s.n});
    vec.gemm_nn({a.data(), s.m, s.k, s.k}, {b.data(), s.k, s.n, s.n}, {c2.data(), s.m, s.n, s.n});
    expect_close(c1, c2, 1e-12);
  }
}

TEST_F(KernelEquivalence, GemmTn) {
  Rng rng(2);
  for (const auto& s : kShapes) {
    const auto a = random_vector(rng, s.k * s.m), b = random_vector(rng, s.k * s.n), c0 = random_vector(rng, s.m * s.n);
    auto c1 = c0, c2 = c0;
    ref.gemm_tn({a.data(), s.k, s.m, s.m}, {b.data(), s.k, s.n, s.n}, {c1.data(), s.m, s.n, s.n});
    vec.gemm_tn({a.data(), s.k, s.m, s.m}, {b.data(), s.k, s.n, s.n}, {c2.data(), s.m, s.n, s.n});
    expect_close(c1, c2, 1e-12);
  }
}

TEST_F(KernelEquivalence, GemmNt) {
  Rng rng(3);
  for (const auto& s : kShapes) {
    const auto a = random_vector(rng, s.m * s.k), b = random_vector(rng, s.n * s.k), c0 = random_vector(rng, s.m * s.n);
    auto c1 = c0, c2 = c0;
    ref.gemm_nt({a.data(), s.m, s.k, s.k}, {b.data(), s.n, s.k, s.k}, {c1.data(), s.m, s.n, s.n});
    vec.gemm_nt({a.data(), s.m, s.k, s.k}, {b.data(), s.n, s.k, s.k}, {c2.data(), s.m, s.n, s.n});
    expect_close(c1, c2, 1e-12);
  }
}

TEST_F(KernelEquivalence, StridedViews) {
  Rng rng(4);
  const std::size_t m = 6, k = 9, n = 11, pad = 5;
  const auto a = random_vector(rng, m * (k + pad)), b = random_vector(rng, k * (n + pad));
  std::vector<double> c1(m * (n + pad), 0.0), c2 = c1;
  ref.gemm_nn({a.data(), m, k, k + pad}, {b.data(), k, n, n + pad}, {c1.data(), m, n, n + pad});
  vec.gemm_nn({a.data(), m, k, k + pad}, {b.data(), k, n, n + pad}, {c2.data(), m, n, n + pad});
  expect_close(c1, c2, 1e-12);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = n; j < n + pad; ++j) EXPECT_EQ(c2[r * (n + pad) + j], 0.0);
  }
}

TEST_F(KernelEquivalence, DotAndAxpy) {
  Rng rng(5);
  for (const std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 100u, 1023u}) {
    const auto x = random_vector(rng, n), y = random_vector(rng, n);
    EXPECT_NEAR(ref.dot(x.data(), y.data(), n), vec.dot(x.data(), y.data(), n), 1e-12 * (1.0 + n));
    auto y1 = y, y2 = y;
    ref.axpy(0.37, x.data(), y1.data(), n);
    vec.axpy(0.37, x.data(), y2.data(), n);
    expect_close(y1, y2, 1e-14);
  }
}

TEST_F(KernelEquivalence, Correlate) {
  Rng rng(6);
  for (const std::size_t taps : {1u, 2u, 5u, 8u, 31u}) {
    for (const std::size_t n : {1u, 3u, 4u, 24u, 1249u}) {
      const auto t = random_vector(rng, taps), padded = random_vector(rng, n + taps - 1);
      std::vector<double> o1(n), o2(n);
      ref.correlate(t.data(), taps, padded.data(), o1.data(), n);
      vec.correlate(t.data(), taps, padded.data(), o2.data(), n);
      expect_close(o1, o2, 1e-13);
    }
  }
}

TEST_F(KernelEquivalence, GateActivations) {
  Rng rng(7);
  for (const std::size_t h : {1u, 3u, 4u, 5u, 8u, 128u, 131u}) {
    auto z = random_vector(rng, 4 * h);
    for (auto& v : z) v *= 10.0;
    z[0] = 800.0;
    z[4 * h - 1] = -800.0;
    auto z1 = z, z2 = z;
    ref.gate_activations(z1.data(), h);
    vec.gate_activations(z2.data(), h);
    for (std::size_t i = 0; i < z.size(); ++i) {
      EXPECT_NEAR(z1[i], z2[i], 1e-13) << i;
      EXPECT_TRUE(std::isfinite(z2[i]));
    }
  }
}

TEST(ScalarKernels, MatchNaiveOracle) {
  const auto& ref = kernels(Isa::Scalar);
  Rng rng(8);
  const std::size_t m = 4, k = 6, n = 5;
  const auto a = random_vector(rng, m * k), b = random_vector(rng, k * n);
  std::vector<double> c(m * n, 1.0);
  ref.gemm_nn({a.data(), m, k, k}, {b.data(), k, n, n}, {c.data(), m, n, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 1.0L;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      EXPECT_NEAR(c[i * n + j], static_cast<double>(s), 1e-13);
    }
  }
  std::vector<double> z = {0.0, 0.0, 0.0, 0.0};
  ref.gate_activations(z.data(), 1);
  EXPECT_DOUBLE_EQ(z[0], 0.5);
  EXPECT_DOUBLE_EQ(z[1], 0.5);
  EXPECT_DOUBLE_EQ(z[2], 0.0);
  EXPECT_DOUBLE_EQ(z[3], 0.5);
}

TEST(Dispatch, NamesAndScalarAlwaysAvailable) {
  EXPECT_TRUE(isa_available(Isa::Scalar));
  EXPECT_EQ(isa_name(Isa::Scalar), "scalar");
  EXPECT_EQ(isa_name(Isa::Avx2), "avx2");
  EXPECT_TRUE(isa_available(active_isa()));
}

}  // namespace
}  // namespace herdtwin::simd
