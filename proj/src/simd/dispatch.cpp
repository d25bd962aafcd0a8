#include <cstdlib>
#include <string_view>

#include "dknn/error.hpp"
#include "dknn/simd.hpp"
#include "kernel_tables.hpp"

namespace dknn::simd {

const Kernels* avx2_kernels() {
#if defined(DKNN_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return &avx2_table();
#endif
  return nullptr;
}

const Kernels* neon_kernels() {
#if defined(DKNN_HAVE_NEON)
  return &neon_table();  // Advanced SIMD is mandatory on AArch64
#else
  return nullptr;
#endif
}

namespace {

const Kernels& select() {
  const char* env = std::getenv("DKNN_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2") {
    const Kernels* k = avx2_kernels();
    require(k != nullptr, ErrorKind::InvalidArgument, "DKNN_SIMD=avx2 requested but AVX2 is unavailable");
    return *k;
  }
  if (want == "neon") {
    const Kernels* k = neon_kernels();
    require(k != nullptr, ErrorKind::InvalidArgument, "DKNN_SIMD=neon requested but NEON is unavailable");
    return *k;
  }
  if (const Kernels* k = avx2_kernels()) return *k;
  if (const Kernels* k = neon_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const Kernels& active() {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace dknn::simd
