#include "dknn/mathcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dknn/error.hpp"
#include "dknn/simd.hpp"

namespace dknn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Distribution::Distribution(std::vector<double> values) : p_(std::move(values)) {
  require(!p_.empty(), ErrorKind::Dimension, "distribution must be non-empty");
  require(is_distribution(p_), ErrorKind::InvalidArgument,
          "values are not a probability distribution (negative entry or sum != 1)");
}

Distribution Distribution::trusted(std::vector<double> values) {
  Distribution d;
  d.p_ = std::move(values);
  return d;
}

Distribution Distribution::uniform(std::size_t c) {
  require(c > 0, ErrorKind::Dimension, "uniform distribution needs c >= 1");
  return trusted(std::vector<double>(c, 1.0 / static_cast<double>(c)));
}

Distribution Distribution::one_hot(std::size_t c, std::size_t index) {
  require(index < c, ErrorKind::InvalidArgument, "one-hot index out of range");
  std::vector<double> v(c, 0.0);
  v[index] = 1.0;
  return trusted(std::move(v));
}

std::size_t Distribution::argmax() const { return dknn::argmax(p_); }

bool is_distribution(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::size_t argmax(std::span<const double> v) {
  require(!v.empty(), ErrorKind::Dimension, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Distribution softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorKind::Dimension, "softmax of empty vector");
  const double top = *std::max_element(logits.begin(), logits.end());
  require(std::isfinite(top), ErrorKind::NonFinite, "softmax input is not finite");
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  require(std::isfinite(sum), ErrorKind::NonFinite, "softmax input is not finite");
  for (double& x : out) x /= sum;
  return Distribution::trusted(std::move(out));
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Dimension,
          "l2_distance: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  return std::sqrt(simd::active().squared_l2(a.data(), b.data(), a.size()));
}

namespace {

template <typename A, typename B>
double kl_impl(std::span<const A> a, std::span<const B> b, double eps) {
  require(a.size() == b.size(), ErrorKind::Dimension,
          "kl_divergence: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  require(!a.empty(), ErrorKind::Dimension, "kl_divergence of empty vectors");
  require(eps > 0.0, ErrorKind::InvalidArgument, "kl_divergence: eps must be positive");
  double sa = 0.0;
  double sb = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    sa += static_cast<double>(a[j]) + eps;
    sb += static_cast<double>(b[j]) + eps;
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double at = (static_cast<double>(a[j]) + eps) / sa;
    const double bt = (static_cast<double>(b[j]) + eps) / sb;
    kl += at * std::log(at / bt);
  }
  return kl;
}

}  // namespace

double kl_divergence(std::span<const double> a, std::span<const double> b, double eps) {
  return kl_impl(a, b, eps);
}
double kl_divergence(std::span<const float> a, std::span<const double> b, double eps) {
  return kl_impl(a, b, eps);
}
double kl_divergence(std::span<const double> a, std::span<const float> b, double eps) {
  return kl_impl(a, b, eps);
}

Distribution sharpen(std::span<const double> p) {
  require(!p.empty(), ErrorKind::Dimension, "sharpen of empty vector");
  double mass = 0.0;
  for (double x : p) {
    require(std::isfinite(x) && x >= 0.0, ErrorKind::InvalidArgument, "sharpen: entries must be finite and >= 0");
    mass += x;
  }
  require(mass > 0.0, ErrorKind::InvalidArgument, "sharpen: input has no positive entry");
  std::vector<double> f(p.size());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    f[j] = p[j] * p[j] / mass;
    total += f[j];
  }
  // Entries below sqrt(denorm_min) square to zero; fall back to the argmax.
  if (total == 0.0) return Distribution::one_hot(p.size(), argmax(p));
  for (double& x : f) x /= total;
  return Distribution::trusted(std::move(f));
}

double cross_entropy(std::span<const double> p, std::size_t y) {
  require(y < p.size(), ErrorKind::InvalidArgument,
          "cross_entropy: class " + std::to_string(y) + " out of range for c=" + std::to_string(p.size()));
  return -std::log(std::max(p[y], kProbEps));
}

Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                            double h) {
  require(h > 0.0, ErrorKind::InvalidArgument, "finite_diff_gradient: h must be positive");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::NonFinite,
            "finite_diff_gradient: f is not finite near coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace dknn
