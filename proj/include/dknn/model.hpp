#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "dknn/features.hpp"
#include "dknn/mathcore.hpp"

namespace dknn {

/// Label-distribution-learning switches and weights.
struct LLConfig {
  double rho = 0.5;        // hinge margin, [0, 1]
  bool enable_kl = true;   // KL(q || p) toward the label-similarity target
  bool enable_cl = true;   // margin contrastive loss over M
  bool cosine_m = false;   // row-normalize L' before forming M
  double kl_weight = 1.0;
  double cl_weight = 1.0;

  bool any() const { return enable_kl || enable_cl; }
  void validate() const;
};

/// Encoder h = tanh(x W1 + b1), head p = softmax(h W2 + b2), and the
/// trainable label-embedding matrix L (one row per label).
struct ModelParams {
  Matrix w1;      // F x d
  Vector b1;      // d
  Matrix w2;      // d x c
  Vector b2;      // c
  Matrix labels;  // c x d

  std::size_t feature_dim() const { return w1.rows(); }
  std::size_t embed_dim() const { return w1.cols(); }
  std::size_t num_labels() const { return w2.cols(); }

  static ModelParams zeros(std::size_t feature_dim, std::size_t embed_dim, std::size_t num_labels);

  /// Draw order from Rng(seed): W1 row-major ~ N(0, 1/sqrt(F)), then W2 ~
  /// N(0, 1/sqrt(d)), then L ~ N(0, 1/sqrt(d)); biases start at zero.
  static ModelParams initialize(std::size_t feature_dim, std::size_t embed_dim, std::size_t num_labels,
                                std::uint64_t seed);

  void check_shapes() const;

  /// Visits (name, flat storage) for W1, b1, W2, b2, L in that order.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    fn("W1", w1.flat());
    fn("b1", std::span<double>(b1));
    fn("W2", w2.flat());
    fn("b2", std::span<double>(b2));
    fn("L", labels.flat());
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    fn("W1", w1.flat());
    fn("b1", std::span<const double>(b1));
    fn("W2", w2.flat());
    fn("b2", std::span<const double>(b2));
    fn("L", labels.flat());
  }

  bool operator==(const ModelParams&) const = default;
};

/// Same shapes as the parameters.
using Gradients = ModelParams;

struct LossBreakdown {
  double ce = 0.0;
  double kl = 0.0;
  double cl = 0.0;
  double total = 0.0;
};

Vector encode(std::span<const double> x, const ModelParams& params);
Vector encode(const SparseVector& x, const ModelParams& params);
Distribution classify(std::span<const double> h, const ModelParams& params);

/// alpha = softmax(h L^T).
Distribution label_attention(std::span<const double> h, const Matrix& labels);
/// Row i scaled by alpha_i.
Matrix scaled_label_matrix(const Distribution& alpha, const Matrix& labels);
/// Gram matrix L' L'^T; upper triangle computed, lower mirrored.
Matrix label_similarity(const Matrix& scaled);
/// Mean over ordered pairs i != j of max(0, rho - M_ii + M_ij); 0 when c < 2.
double contrastive_loss(const Matrix& similarity, double rho);
/// softmax of row y of M.
Distribution soft_target(const Matrix& similarity, std::size_t y);

/// All intermediates of the objective for one example.
struct ForwardTrace {
  Vector hidden;
  Distribution p;
  // Populated only when some LL loss is enabled.
  Distribution alpha;
  Matrix scaled_labels;
  Matrix gram_rows;  // rows entering the Gram product (L', or L' row-normalized)
  Matrix similarity;
  Distribution soft_target;
  LossBreakdown loss;
};

ForwardTrace forward(const SparseVector& x, std::size_t y, const ModelParams& params, const LLConfig& config);

LossBreakdown total_loss(std::span<const double> x, std::size_t y, const ModelParams& params,
                         const LLConfig& config);

/// Adds scale * d(total)/d(params) into grads and returns the loss.
LossBreakdown accumulate_gradients(const SparseVector& x, std::size_t y, const ModelParams& params,
                                   const LLConfig& config, double scale, Gradients& grads);

Gradients gradients(std::span<const double> x, std::size_t y, const ModelParams& params, const LLConfig& config);

// Checkpoint: "DKNM", u16 version 1, u32 F, u32 d, u32 c, then W1, b1, W2, b2,
// L as little-endian f32 row-major blocks.
std::string serialize_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view bytes);
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams read_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 of the checkpoint bytes; stamped into representation stores.
std::uint64_t model_fingerprint(const ModelParams& params);

}  // namespace dknn
