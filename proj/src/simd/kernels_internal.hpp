#pragma once

#include "ivpp/simd/kernels.hpp"

namespace ivpp::simd::detail {

KernelTable make_scalar_table();

#if defined(IVPP_HAVE_AVX2)
KernelTable make_avx2_table();
#endif

}  // namespace ivpp::simd::detail
