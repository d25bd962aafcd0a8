#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace dknn {

using Vector = std::vector<double>;

inline constexpr double kProbEps = 1e-12;          // KL smoothing and CE clamp
inline constexpr double kDistributionTol = 1e-9;   // |sum - 1| allowed for a Distribution

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Probability vector over c classes: nonnegative, sums to 1 within 1e-9.
class Distribution {
 public:
  Distribution() = default;
  /// Validates the invariants; throws InvalidArgument otherwise.
  explicit Distribution(std::vector<double> values);

  /// Wraps values the caller has already produced as a distribution (softmax
  /// output, convex mixes); no validation.
  static Distribution trusted(std::vector<double> values);
  static Distribution uniform(std::size_t c);
  static Distribution one_hot(std::size_t c, std::size_t index);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  const std::vector<double>& vec() const { return p_; }

  /// Lowest index wins ties.
  std::size_t argmax() const;

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> p_;
};

bool is_distribution(std::span<const double> p, double tol = kDistributionTol);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> v);

/// max-subtracted softmax.
Distribution softmax(std::span<const double> logits);

/// Euclidean distance. Accumulates through the active SIMD kernel.
double l2_distance(std::span<const double> a, std::span<const double> b);

/// KL(a || b) after additive eps smoothing and renormalization of both sides.
double kl_divergence(std::span<const double> a, std::span<const double> b, double eps = kProbEps);
double kl_divergence(std::span<const float> a, std::span<const double> b, double eps = kProbEps);
double kl_divergence(std::span<const double> a, std::span<const float> b, double eps = kProbEps);

/// Square-and-renormalize in two steps: f_j = p_j^2 / sum(p), then f / sum(f).
Distribution sharpen(std::span<const double> p);

/// -ln(max(p_y, 1e-12)).
double cross_entropy(std::span<const double> p, std::size_t y);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h.
Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, double h = 1e-5);

}  // namespace dknn
