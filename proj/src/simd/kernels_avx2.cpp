// Compiled with -mavx2 -mfma. Only reached after the runtime CPU check in
// dispatch.cpp succeeds.

#include <immintrin.h>

#include <algorithm>

#include "kernels_internal.hpp"

namespace ivpp::simd::detail {
namespace {

struct F32 {
  using T = float;
  using V = __m256;
  static constexpr std::size_t kWidth = 8;
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V set1(T x) { return _mm256_set1_ps(x); }
  static V zero() { return _mm256_setzero_ps(); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static T hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

struct F64 {
  using T = double;
  using V = __m256d;
  static constexpr std::size_t kWidth = 4;
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V set1(T x) { return _mm256_set1_pd(x); }
  static V zero() { return _mm256_setzero_pd(); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static T hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

template <class Tr>
typename Tr::T dot(const typename Tr::T* x, const typename Tr::T* y, std::size_t n) {
  constexpr std::size_t w = Tr::kWidth;
  auto acc0 = Tr::zero();
  auto acc1 = Tr::zero();
  std::size_t i = 0;
  for (; i + 2 * w <= n; i += 2 * w) {
    acc0 = Tr::fmadd(Tr::load(x + i), Tr::load(y + i), acc0);
    acc1 = Tr::fmadd(Tr::load(x + i + w), Tr::load(y + i + w), acc1);
  }
  for (; i + w <= n; i += w) acc0 = Tr::fmadd(Tr::load(x + i), Tr::load(y + i), acc0);
  auto total = Tr::hsum(acc0) + Tr::hsum(acc1);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

template <class Tr>
void axpy(typename Tr::T alpha, const typename Tr::T* x, typename Tr::T* y, std::size_t n) {
  constexpr std::size_t w = Tr::kWidth;
  const auto av = Tr::set1(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) Tr::store(y + i, Tr::fmadd(av, Tr::load(x + i), Tr::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class Tr>
void scale(typename Tr::T alpha, typename Tr::T* x, std::size_t n) {
  constexpr std::size_t w = Tr::kWidth;
  const auto av = Tr::set1(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) Tr::store(x + i, Tr::mul(av, Tr::load(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

// 4 rows x (2 * width) columns register tile, accumulated over kc.
template <class Tr>
inline void micro_4x2w(std::size_t kc, const typename Tr::T* a, std::size_t lda,
                       const typename Tr::T* b, std::size_t ldb, typename Tr::T* c,
                       std::size_t ldc, typename Tr::T alpha) {
  constexpr std::size_t w = Tr::kWidth;
  auto c00 = Tr::zero(), c01 = Tr::zero();
  auto c10 = Tr::zero(), c11 = Tr::zero();
  auto c20 = Tr::zero(), c21 = Tr::zero();
  auto c30 = Tr::zero(), c31 = Tr::zero();
  for (std::size_t p = 0; p < kc; ++p) {
    const auto b0 = Tr::load(b + p * ldb);
    const auto b1 = Tr::load(b + p * ldb + w);
    auto av = Tr::set1(a[p]);
    c00 = Tr::fmadd(av, b0, c00);
    c01 = Tr::fmadd(av, b1, c01);
    av = Tr::set1(a[lda + p]);
    c10 = Tr::fmadd(av, b0, c10);
    c11 = Tr::fmadd(av, b1, c11);
    av = Tr::set1(a[2 * lda + p]);
    c20 = Tr::fmadd(av, b0, c20);
    c21 = Tr::fmadd(av, b1, c21);
    av = Tr::set1(a[3 * lda + p]);
    c30 = Tr::fmadd(av, b0, c30);
    c31 = Tr::fmadd(av, b1, c31);
  }
  const auto alv = Tr::set1(alpha);
  auto flush = [&](typename Tr::T* row, decltype(c00) v0, decltype(c00) v1) {
    Tr::store(row, Tr::fmadd(alv, v0, Tr::load(row)));
    Tr::store(row + w, Tr::fmadd(alv, v1, Tr::load(row + w)));
  };
  flush(c, c00, c01);
  flush(c + ldc, c10, c11);
  flush(c + 2 * ldc, c20, c21);
  flush(c + 3 * ldc, c30, c31);
}

template <class Tr>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, typename Tr::T alpha,
             const typename Tr::T* a, std::size_t lda, const typename Tr::T* b,
             std::size_t ldb, typename Tr::T beta, typename Tr::T* c, std::size_t ldc) {
  using T = typename Tr::T;
  constexpr std::size_t w = Tr::kWidth;
  constexpr std::size_t kc_max = 256;
  constexpr std::size_t nc_max = 512;

  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      scale<Tr>(beta, crow, n);
    }
  }
  if (k == 0 || alpha == T(0)) return;

  for (std::size_t p0 = 0; p0 < k; p0 += kc_max) {
    const std::size_t kc = std::min(kc_max, k - p0);
    for (std::size_t j0 = 0; j0 < n; j0 += nc_max) {
      const std::size_t nc = std::min(nc_max, n - j0);
      const std::size_t jend = j0 + nc;
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) {
        const T* ablk = a + i * lda + p0;
        std::size_t j = j0;
        for (; j + 2 * w <= jend; j += 2 * w) {
          micro_4x2w<Tr>(kc, ablk, lda, b + p0 * ldb + j, ldb, c + i * ldc + j, ldc, alpha);
        }
        if (j < jend) {
          for (std::size_t r = 0; r < 4; ++r) {
            T* crow = c + (i + r) * ldc;
            for (std::size_t p = 0; p < kc; ++p) {
              const T aip = alpha * ablk[r * lda + p];
              const T* brow = b + (p0 + p) * ldb;
              for (std::size_t jj = j; jj < jend; ++jj) crow[jj] += aip * brow[jj];
            }
          }
        }
      }
      for (; i < m; ++i) {
        T* crow = c + i * ldc + j0;
        for (std::size_t p = 0; p < kc; ++p) {
          const T aip = alpha * a[i * lda + p0 + p];
          axpy<Tr>(aip, b + (p0 + p) * ldb + j0, crow, nc);
        }
      }
    }
  }
}

}  // namespace

KernelTable make_avx2_table() {
  return KernelTable{
      Isa::avx2,
      {&dot<F32>, &axpy<F32>, &scale<F32>, &gemm_nn<F32>},
      {&dot<F64>, &axpy<F64>, &scale<F64>, &gemm_nn<F64>},
  };
}

}  // namespace ivpp::simd::detail
