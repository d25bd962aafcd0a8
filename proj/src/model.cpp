#include "dknn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dknn/error.hpp"
#include "dknn/rng.hpp"
#include "dknn/simd.hpp"

namespace dknn {

void LLConfig::validate() const {
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::InvalidArgument, "rho must lie in [0, 1]");
  require(std::isfinite(kl_weight) && kl_weight >= 0.0, ErrorKind::InvalidArgument, "kl_weight must be >= 0");
  require(std::isfinite(cl_weight) && cl_weight >= 0.0, ErrorKind::InvalidArgument, "cl_weight must be >= 0");
}

ModelParams ModelParams::zeros(std::size_t feature_dim, std::size_t embed_dim, std::size_t num_labels) {
  require(feature_dim > 0 && embed_dim > 0 && num_labels > 0, ErrorKind::Dimension,
          "model dimensions must be positive");
  ModelParams p;
  p.w1 = Matrix(feature_dim, embed_dim);
  p.b1 = Vector(embed_dim, 0.0);
  p.w2 = Matrix(embed_dim, num_labels);
  p.b2 = Vector(num_labels, 0.0);
  p.labels = Matrix(num_labels, embed_dim);
  return p;
}

ModelParams ModelParams::initialize(std::size_t feature_dim, std::size_t embed_dim, std::size_t num_labels,
                                    std::uint64_t seed) {
  ModelParams p = zeros(feature_dim, embed_dim, num_labels);
  Rng rng(seed);
  const double w1_std = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  const double d_std = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (double& w : p.w1.flat()) w = w1_std * rng.normal();
  for (double& w : p.w2.flat()) w = d_std * rng.normal();
  for (double& w : p.labels.flat()) w = d_std * rng.normal();
  return p;
}

void ModelParams::check_shapes() const {
  const std::size_t f = feature_dim(), d = embed_dim(), c = num_labels();
  require(f > 0 && d > 0 && c > 0 && b1.size() == d && w2.rows() == d && b2.size() == c && labels.rows() == c &&
              labels.cols() == d,
          ErrorKind::Dimension, "model parameter shapes are inconsistent");
}

Vector encode(const SparseVector& x, const ModelParams& params) {
  require(x.dim == params.feature_dim(), ErrorKind::Dimension,
          "encode: feature length " + std::to_string(x.dim) + " != model F " + std::to_string(params.feature_dim()));
  const auto& k = simd::active();
  Vector h = params.b1;
  for (std::size_t n = 0; n < x.indices.size(); ++n)
    k.axpy(x.values[n], params.w1.row(x.indices[n]).data(), h.data(), h.size());
  for (double& v : h) v = std::tanh(v);
  return h;
}

Vector encode(std::span<const double> x, const ModelParams& params) {
  return encode(SparseVector::from_dense(x), params);
}

Distribution classify(std::span<const double> h, const ModelParams& params) {
  require(h.size() == params.embed_dim(), ErrorKind::Dimension, "classify: embedding length mismatch");
  const auto& k = simd::active();
  Vector logits = params.b2;
  for (std::size_t j = 0; j < h.size(); ++j) k.axpy(h[j], params.w2.row(j).data(), logits.data(), logits.size());
  return softmax(logits);
}

Distribution label_attention(std::span<const double> h, const Matrix& labels) {
  require(h.size() == labels.cols(), ErrorKind::Dimension, "label_attention: embedding length mismatch");
  const auto& k = simd::active();
  Vector scores(labels.rows());
  for (std::size_t i = 0; i < labels.rows(); ++i) scores[i] = k.dot(h.data(), labels.row(i).data(), h.size());
  return softmax(scores);
}

Matrix scaled_label_matrix(const Distribution& alpha, const Matrix& labels) {
  require(alpha.size() == labels.rows(), ErrorKind::Dimension, "scaled_label_matrix: alpha length mismatch");
  Matrix out(labels.rows(), labels.cols());
  for (std::size_t i = 0; i < labels.rows(); ++i)
    for (std::size_t j = 0; j < labels.cols(); ++j) out(i, j) = alpha[i] * labels(i, j);
  return out;
}

Matrix label_similarity(const Matrix& scaled) {
  const auto& k = simd::active();
  const std::size_t c = scaled.rows();
  Matrix m(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i; j < c; ++j) {
      m(i, j) = k.dot(scaled.row(i).data(), scaled.row(j).data(), scaled.cols());
      m(j, i) = m(i, j);
    }
  }
  return m;
}

double contrastive_loss(const Matrix& similarity, double rho) {
  require(similarity.rows() == similarity.cols(), ErrorKind::Dimension, "contrastive_loss: M must be square");
  require(rho >= 0.0 && rho <= 1.0, ErrorKind::InvalidArgument, "contrastive_loss: rho must lie in [0, 1]");
  const std::size_t c = similarity.rows();
  if (c < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (i != j) sum += std::max(0.0, rho - similarity(i, i) + similarity(i, j));
  return sum / static_cast<double>(c * (c - 1));
}

Distribution soft_target(const Matrix& similarity, std::size_t y) {
  require(y < similarity.rows(), ErrorKind::InvalidArgument, "soft_target: class index out of range");
  return softmax(similarity.row(y));
}

namespace {

constexpr double kNormFloor = 1e-12;

Matrix row_normalize(const Matrix& m, Vector& norms) {
  Matrix out(m.rows(), m.cols());
  norms.assign(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sq = 0.0;
    for (double v : m.row(i)) sq += v * v;
    norms[i] = std::max(std::sqrt(sq), kNormFloor);
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / norms[i];
  }
  return out;
}

// Smoothed pair used by the KL term: x~ = (x + eps) / sum(x + eps).
struct Smoothed {
  Vector values;
  double mass = 0.0;
};

Smoothed smooth(std::span<const double> x) {
  Smoothed s;
  for (double v : x) s.mass += v + kProbEps;
  s.values.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) s.values[j] = (x[j] + kProbEps) / s.mass;
  return s;
}

// Backprop through x~ = (x + eps) / S: dL/dx_m = (g_m - <g, x~>) / S.
Vector unsmooth_grad(const Vector& g, const Smoothed& s) {
  double inner = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) inner += g[j] * s.values[j];
  Vector out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = (g[j] - inner) / s.mass;
  return out;
}

// Backprop through p = softmax(z): dL/dz = p * (g - <g, p>).
Vector softmax_grad(const Vector& g, const Distribution& p) {
  double inner = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) inner += g[j] * p[j];
  Vector out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) out[j] = p[j] * (g[j] - inner);
  return out;
}

}  // namespace

ForwardTrace forward(const SparseVector& x, std::size_t y, const ModelParams& params, const LLConfig& config) {
  const std::size_t c = params.num_labels();
  require(y < c, ErrorKind::InvalidArgument,
          "label index " + std::to_string(y) + " out of range for c=" + std::to_string(c));
  ForwardTrace t;
  t.hidden = encode(x, params);
  t.p = classify(t.hidden, params);
  t.loss.ce = cross_entropy(t.p.values(), y);
  if (config.any()) {
    t.alpha = label_attention(t.hidden, params.labels);
    t.scaled_labels = scaled_label_matrix(t.alpha, params.labels);
    if (config.cosine_m) {
      Vector norms;
      t.gram_rows = row_normalize(t.scaled_labels, norms);
    } else {
      t.gram_rows = t.scaled_labels;
    }
    t.similarity = label_similarity(t.gram_rows);
    t.soft_target = soft_target(t.similarity, y);
    if (config.enable_kl) t.loss.kl = config.kl_weight * kl_divergence(t.soft_target.values(), t.p.values());
    if (config.enable_cl) t.loss.cl = config.cl_weight * contrastive_loss(t.similarity, config.rho);
  }
  t.loss.total = t.loss.ce + t.loss.kl + t.loss.cl;
  return t;
}

LossBreakdown total_loss(std::span<const double> x, std::size_t y, const ModelParams& params,
                         const LLConfig& config) {
  return forward(SparseVector::from_dense(x), y, params, config).loss;
}

LossBreakdown accumulate_gradients(const SparseVector& x, std::size_t y, const ModelParams& params,
                                   const LLConfig& config, double scale, Gradients& grads) {
  const ForwardTrace t = forward(x, y, params, config);
  const std::size_t c = params.num_labels();
  const std::size_t d = params.embed_dim();
  const auto& k = simd::active();

  // dL/dlogits
  Vector g_logits(c, 0.0);
  if (t.p[y] > kProbEps) {
    for (std::size_t j = 0; j < c; ++j) g_logits[j] = t.p[j];
    g_logits[y] -= 1.0;
  }

  Vector g_hidden(d, 0.0);
  if (config.any()) {
    Matrix g_sim(c, c);
    if (config.enable_kl) {
      const Smoothed qs = smooth(t.soft_target.values());
      const Smoothed ps = smooth(t.p.values());
      Vector g_qs(c), g_ps(c);
      for (std::size_t j = 0; j < c; ++j) {
        g_qs[j] = config.kl_weight * (std::log(qs.values[j] / ps.values[j]) + 1.0);
        g_ps[j] = -config.kl_weight * qs.values[j] / ps.values[j];
      }
      const Vector g_p = softmax_grad(unsmooth_grad(g_ps, ps), t.p);
      for (std::size_t j = 0; j < c; ++j) g_logits[j] += g_p[j];
      const Vector g_row = softmax_grad(unsmooth_grad(g_qs, qs), t.soft_target);
      for (std::size_t j = 0; j < c; ++j) g_sim(y, j) += g_row[j];
    }
    if (config.enable_cl && c >= 2) {
      const double w = config.cl_weight / static_cast<double>(c * (c - 1));
      for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          if (i == j) continue;
          if (config.rho - t.similarity(i, i) + t.similarity(i, j) > 0.0) {
            g_sim(i, i) -= w;
            g_sim(i, j) += w;
          }
        }
      }
    }

    // M = R R^T  =>  dL/dR = (G + G^T) R
    Matrix g_rows(c, d);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double coeff = g_sim(i, j) + g_sim(j, i);
        if (coeff != 0.0) k.axpy(coeff, t.gram_rows.row(j).data(), g_rows.row(i).data(), d);
      }

    Matrix g_scaled = g_rows;
    if (config.cosine_m) {
      // R_i = S_i / n_i:  dL/dS_i = (g_i - R_i <R_i, g_i>) / n_i
      for (std::size_t i = 0; i < c; ++i) {
        double sq = 0.0;
        for (double v : t.scaled_labels.row(i)) sq += v * v;
        const double norm = std::sqrt(sq);
        if (norm > kNormFloor) {
          const double inner = k.dot(t.gram_rows.row(i).data(), g_rows.row(i).data(), d);
          for (std::size_t j = 0; j < d; ++j)
            g_scaled(i, j) = (g_rows(i, j) - t.gram_rows(i, j) * inner) / norm;
        } else {
          for (std::size_t j = 0; j < d; ++j) g_scaled(i, j) = g_rows(i, j) / kNormFloor;
        }
      }
    }

    // L'_i = alpha_i l_i
    Vector g_alpha(c);
    for (std::size_t i = 0; i < c; ++i) {
      g_alpha[i] = k.dot(g_scaled.row(i).data(), params.labels.row(i).data(), d);
      k.axpy(scale * t.alpha[i], g_scaled.row(i).data(), grads.labels.row(i).data(), d);
    }
    // alpha = softmax(L h)
    const Vector g_scores = softmax_grad(g_alpha, t.alpha);
    for (std::size_t i = 0; i < c; ++i) {
      k.axpy(scale * g_scores[i], t.hidden.data(), grads.labels.row(i).data(), d);
      k.axpy(g_scores[i], params.labels.row(i).data(), g_hidden.data(), d);
    }
  }

  // Head: logits = h W2 + b2
  for (std::size_t j = 0; j < d; ++j) {
    k.axpy(scale * t.hidden[j], g_logits.data(), grads.w2.row(j).data(), c);
    g_hidden[j] += k.dot(params.w2.row(j).data(), g_logits.data(), c);
  }
  k.axpy(scale, g_logits.data(), grads.b2.data(), c);

  // Encoder: h = tanh(x W1 + b1)
  Vector g_pre(d);
  for (std::size_t j = 0; j < d; ++j) g_pre[j] = g_hidden[j] * (1.0 - t.hidden[j] * t.hidden[j]);
  k.axpy(scale, g_pre.data(), grads.b1.data(), d);
  for (std::size_t n = 0; n < x.indices.size(); ++n)
    k.axpy(scale * x.values[n], g_pre.data(), grads.w1.row(x.indices[n]).data(), d);

  return t.loss;
}

Gradients gradients(std::span<const double> x, std::size_t y, const ModelParams& params, const LLConfig& config) {
  Gradients g = ModelParams::zeros(params.feature_dim(), params.embed_dim(), params.num_labels());
  accumulate_gradients(SparseVector::from_dense(x), y, params, config, 1.0, g);
  return g;
}

}  // namespace dknn
