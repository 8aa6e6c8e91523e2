#include <cstdlib>
#include <string>
#include <vector>

#include "kernels_internal.hpp"

namespace ivpp::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() {
  static const KernelTable table = detail::make_scalar_table();
  return table;
}

const KernelTable* avx2_table() {
#if defined(IVPP_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (!supported) return nullptr;
  static const KernelTable table = detail::make_avx2_table();
  return &table;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* env = std::getenv("IVPP_SIMD");
    if (env != nullptr && std::string(env) == "scalar") return &scalar_table();
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
  }();
  return *chosen;
}

template <class T>
void gemm(const KernelTable& table, Trans ta, Trans tb, std::size_t m, std::size_t n,
          std::size_t k, T alpha, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T beta, T* c, std::size_t ldc) {
  // Transposed operands are packed so the kernel only ever sees the nn layout.
  thread_local std::vector<T> pack_a;
  thread_local std::vector<T> pack_b;
  const T* ap = a;
  std::size_t lda_eff = lda;
  if (ta == Trans::yes) {
    pack_a.resize(m * k);
    for (std::size_t p = 0; p < k; ++p) {
      const T* src = a + p * lda;
      for (std::size_t i = 0; i < m; ++i) pack_a[i * k + p] = src[i];
    }
    ap = pack_a.data();
    lda_eff = k;
  }
  const T* bp = b;
  std::size_t ldb_eff = ldb;
  if (tb == Trans::yes) {
    pack_b.resize(k * n);
    for (std::size_t j = 0; j < n; ++j) {
      const T* src = b + j * ldb;
      for (std::size_t p = 0; p < k; ++p) pack_b[p * n + j] = src[p];
    }
    bp = pack_b.data();
    ldb_eff = n;
  }
  kernels<T>(table).gemm_nn(m, n, k, alpha, ap, lda_eff, bp, ldb_eff, beta, c, ldc);
}

template void gemm<float>(const KernelTable&, Trans, Trans, std::size_t, std::size_t,
                          std::size_t, float, const float*, std::size_t, const float*,
                          std::size_t, float, float*, std::size_t);
template void gemm<double>(const KernelTable&, Trans, Trans, std::size_t, std::size_t,
                           std::size_t, double, const double*, std::size_t, const double*,
                           std::size_t, double, double*, std::size_t);

}  // namespace ivpp::simd
