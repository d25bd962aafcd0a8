// AArch64 variant. Two float64x2 accumulators stand in for the four AVX2
// lanes so the reduction order matches the scalar reference.
#include "dknn/simd.hpp"

#include <arm_neon.h>

#include "kernel_tables.hpp"

namespace dknn::simd {
namespace {

inline double reduce_lanes(float64x2_t lo, float64x2_t hi) {
  // lo = (s0, s1), hi = (s2, s3)
  const double a = vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1);
  const double b = vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1);
  return a + b;
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double total = reduce_lanes(lo, hi);
  for (; i < n; ++i) total = total + a[i] * b[i];
  return total;
}

double squared_l2_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    lo = vaddq_f64(lo, vmulq_f64(d0, d0));
    hi = vaddq_f64(hi, vmulq_f64(d1, d1));
  }
  double total = reduce_lanes(lo, hi);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total = total + d * d;
  }
  return total;
}

double squared_l2_f32_neon(const float* key, const double* query, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t k = vld1q_f32(key + i);
    const float64x2_t d0 = vsubq_f64(vcvt_f64_f32(vget_low_f32(k)), vld1q_f64(query + i));
    const float64x2_t d1 = vsubq_f64(vcvt_high_f64_f32(k), vld1q_f64(query + i + 2));
    lo = vaddq_f64(lo, vmulq_f64(d0, d0));
    hi = vaddq_f64(hi, vmulq_f64(d1, d1));
  }
  double total = reduce_lanes(lo, hi);
  for (; i < n; ++i) {
    const double d = static_cast<double>(key[i]) - query[i];
    total = total + d * d;
  }
  return total;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(a, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adam_update_neon(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoefficients& c) {
  const float64x2_t b1 = vdupq_n_f64(c.beta1);
  const float64x2_t b2 = vdupq_n_f64(c.beta2);
  const float64x2_t omb1 = vdupq_n_f64(c.one_minus_beta1);
  const float64x2_t omb2 = vdupq_n_f64(c.one_minus_beta2);
  const float64x2_t bc1 = vdupq_n_f64(c.bias_correction1);
  const float64x2_t bc2 = vdupq_n_f64(c.bias_correction2);
  const float64x2_t lr = vdupq_n_f64(c.learning_rate);
  const float64x2_t eps = vdupq_n_f64(c.eps);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(omb1, g));
    const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(vmulq_f64(omb2, g), g));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, bc1);
    const float64x2_t v_hat = vdivq_f64(vi, bc2);
    const float64x2_t step = vdivq_f64(vmulq_f64(lr, m_hat), vaddq_f64(vsqrtq_f64(v_hat), eps));
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
  }
  if (i < n) scalar_kernels().adam_update(param + i, grad + i, m + i, v + i, n - i, c);
}

constexpr Kernels kNeon{
    "neon", dot_neon, squared_l2_neon, squared_l2_f32_neon, axpy_neon, adam_update_neon,
};

}  // namespace

const Kernels& neon_table() { return kNeon; }

}  // namespace dknn::simd
