#pragma once

#include "dknn/simd.hpp"

namespace dknn::simd {

// Raw tables; callers go through avx2_kernels()/neon_kernels(), which add the
// runtime feature check.
const Kernels& avx2_table();
const Kernels& neon_table();

}  // namespace dknn::simd
