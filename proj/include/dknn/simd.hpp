#pragma once

#include <cstddef>
#include <string_view>

/// Data-parallel inner loops behind the numeric modules.
///
/// Every kernel has a scalar reference and optional AVX2 / NEON variants. The
/// variants are required to be bit-identical to the reference, which pins the
/// arithmetic order:
///
///  * reductions (dot, squared_l2) keep four interleaved partial sums, lane j
///    accumulating indices i with i % 4 == j over the largest multiple of 4,
///    combine them as (s0 + s1) + (s2 + s3), then add the tail sequentially;
///  * elementwise kernels (axpy, adam_update) evaluate the same expression
///    tree per element, using only correctly rounded operations.
///
/// The build disables FMA contraction so these trees survive the compiler.
namespace dknn::simd {

struct AdamCoefficients {
  double beta1;
  double beta2;
  double one_minus_beta1;
  double one_minus_beta2;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
  double learning_rate;
  double eps;
};

struct Kernels {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  // Stored single-precision key against a double-precision query.
  double (*squared_l2_f32)(const float* key, const double* query, std::size_t n);
  // y[i] = y[i] + alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // m = b1*m + (1-b1)*g;  v = b2*v + ((1-b2)*g)*g;
  // param = param - lr * (m / bc1) / (sqrt(v / bc2) + eps)
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoefficients& c);
};

const Kernels& scalar_kernels();

/// nullptr when the variant was not compiled in or the CPU lacks the feature.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

/// Kernel table used by the library. Chosen once: the DKNN_SIMD environment
/// variable ("scalar", "avx2", "neon") overrides detection.
const Kernels& active();

}  // namespace dknn::simd
