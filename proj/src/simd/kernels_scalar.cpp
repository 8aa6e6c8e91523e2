#include <algorithm>

#include "kernels_internal.hpp"

namespace ivpp::simd::detail {
namespace {

template <class T>
T dot(const T* x, const T* y, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <class T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale(T alpha, T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
             std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      std::fill(crow, crow + n, T(0));
    } else if (beta != T(1)) {
      scale(beta, crow, n);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = alpha * a[i * lda + p];
      if (aip == T(0)) continue;
      axpy(aip, b + p * ldb, crow, n);
    }
  }
}

}  // namespace

KernelTable make_scalar_table() {
  return KernelTable{
      Isa::scalar,
      {&dot<float>, &axpy<float>, &scale<float>, &gemm_nn<float>},
      {&dot<double>, &axpy<double>, &scale<double>, &gemm_nn<double>},
  };
}

}  // namespace ivpp::simd::detail
