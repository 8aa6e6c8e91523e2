#pragma once

// Dense arithmetic kernels used by the network layers and the objectives.
//
// Every kernel has a portable scalar reference implementation and, where the
// build target supports it, an AVX2+FMA variant. The variant is chosen once
// at runtime from CPUID; setting IVPP_SIMD=scalar in the environment forces
// the reference path. All matrices are row-major.

#include <cstddef>
#include <span>
#include <string_view>
#include <type_traits>

namespace ivpp::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

template <class T>
struct KernelSet {
  T (*dot)(const T* x, const T* y, std::size_t n);
  void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
  void (*scale)(T alpha, T* x, std::size_t n);
  // c[m x n] = alpha * a[m x k] * b[k x n] + beta * c
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
                  std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                  std::size_t ldc);
};

struct KernelTable {
  Isa isa;
  KernelSet<float> f32;
  KernelSet<double> f64;
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

// Table selected for this process. Resolved on first use.
const KernelTable& active();

template <class T>
const KernelSet<T>& kernels(const KernelTable& table) {
  if constexpr (std::is_same_v<T, float>) {
    return table.f32;
  } else {
    return table.f64;
  }
}

template <class T>
T dot(std::span<const T> x, std::span<const T> y) {
  return kernels<T>(active()).dot(x.data(), y.data(), x.size());
}

template <class T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  kernels<T>(active()).axpy(alpha, x.data(), y.data(), x.size());
}

enum class Trans { no, yes };

// General matrix multiply with optional transposes:
//   c[m x n] = alpha * op(a) * op(b) + beta * c
// op(a) is m x k and op(b) is k x n; lda/ldb are the row strides of the
// stored (untransposed) arrays.
template <class T>
void gemm(const KernelTable& table, Trans ta, Trans tb, std::size_t m, std::size_t n,
          std::size_t k, T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc);

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
          std::size_t ldc) {
  gemm<T>(active(), ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace ivpp::simd
