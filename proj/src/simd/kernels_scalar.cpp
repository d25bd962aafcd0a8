#include "dknn/simd.hpp"

#include <cmath>

namespace dknn::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = s0 + a[i] * b[i];
    s1 = s1 + a[i + 1] * b[i + 1];
    s2 = s2 + a[i + 2] * b[i + 2];
    s3 = s3 + a[i + 3] * b[i + 3];
  }
  double total = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) total = total + a[i] * b[i];
  return total;
}

double squared_l2_scalar(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2];
    const double d3 = a[i + 3] - b[i + 3];
    s0 = s0 + d0 * d0;
    s1 = s1 + d1 * d1;
    s2 = s2 + d2 * d2;
    s3 = s3 + d3 * d3;
  }
  double total = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total = total + d * d;
  }
  return total;
}

double squared_l2_f32_scalar(const float* key, const double* query, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double d0 = static_cast<double>(key[i]) - query[i];
    const double d1 = static_cast<double>(key[i + 1]) - query[i + 1];
    const double d2 = static_cast<double>(key[i + 2]) - query[i + 2];
    const double d3 = static_cast<double>(key[i + 3]) - query[i + 3];
    s0 = s0 + d0 * d0;
    s1 = s1 + d1 * d1;
    s2 = s2 + d2 * d2;
    s3 = s3 + d3 * d3;
  }
  double total = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) {
    const double d = static_cast<double>(key[i]) - query[i];
    total = total + d * d;
  }
  return total;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adam_update_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoefficients& c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + c.one_minus_beta1 * g;
    v[i] = c.beta2 * v[i] + (c.one_minus_beta2 * g) * g;
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] = param[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

constexpr Kernels kScalar{
    "scalar", dot_scalar, squared_l2_scalar, squared_l2_f32_scalar, axpy_scalar, adam_update_scalar,
};

}  // namespace

const Kernels& scalar_kernels() { return kScalar; }

}  // namespace dknn::simd
