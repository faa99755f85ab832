#pragma once

#include "gsbl/simd.hpp"

namespace gsbl::simd::detail {

const KernelTable& scalar_table() noexcept;

#if defined(GSBL_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif

#if defined(GSBL_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

}  // namespace gsbl::simd::detail
