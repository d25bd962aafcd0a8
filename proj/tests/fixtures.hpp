#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dknn/features.hpp"
#include "dknn/model.hpp"

namespace test {

// Six training points, two classes, F=4, d=3.
struct SixPointFixture {
  dknn::ModelParams params;
  std::vector<std::vector<double>> train_x;
  std::vector<std::uint32_t> train_y;
  std::vector<double> query;
  std::size_t k = 3;
  double lambda = 0.5;
};

inline SixPointFixture six_point_fixture() {
  SixPointFixture f;
  f.params = dknn::ModelParams::zeros(4, 3, 2);
  const double w1[] = {0.8, -0.2, 0.1, -0.5, 0.9, 0.3, 0.4, 0.4, -0.7, -0.1, -0.6, 0.5};
  std::copy(std::begin(w1), std::end(w1), f.params.w1.flat().begin());
  f.params.b1 = {0.05, -0.1, 0.0};
  const double w2[] = {1.2, -0.8, -0.4, 1.1, 0.6, 0.2};
  std::copy(std::begin(w2), std::end(w2), f.params.w2.flat().begin());
  f.params.b2 = {0.1, -0.1};
  const double l[] = {0.7, 0.1, -0.2, -0.3, 0.8, 0.4};
  std::copy(std::begin(l), std::end(l), f.params.labels.flat().begin());
  f.train_x = {{1.0, 0.0, 0.2, 0.0}, {0.0, 1.0, 0.0, 0.3}, {0.9, 0.1, 0.0, 0.0},
               {0.1, 0.8, 0.0, 0.5}, {0.0, 0.6, 0.6, 0.5}, {0.6, 0.0, 0.5, 0.1}};
  f.train_y = {0, 1, 0, 1, 1, 0};
  f.query = {0.5, 0.4, 0.3, 0.1};
  return f;
}

// Step-by-step evaluation of the retrieval pipeline straight from the
// definitions: no library code beyond plain arithmetic.
struct OracleBreakdown {
  std::vector<double> p_model, p_text_sharp, p_pro_sharp, p_knn, p_final;
};

inline std::vector<double> oracle_hidden(const dknn::ModelParams& m, const std::vector<double>& x) {
  const std::size_t d = m.embed_dim();
  std::vector<double> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    double s = m.b1[j];
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * m.w1(i, j);
    h[j] = std::tanh(s);
  }
  return h;
}

inline std::vector<double> oracle_softmax(std::vector<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) sum += (v = std::exp(v - top));
  for (double& v : z) v /= sum;
  return z;
}

inline std::vector<double> oracle_probs(const dknn::ModelParams& m, const std::vector<double>& h) {
  std::vector<double> z(m.num_labels());
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = m.b2[c];
    for (std::size_t j = 0; j < h.size(); ++j) z[c] += h[j] * m.w2(j, c);
  }
  return oracle_softmax(z);
}

inline double oracle_kl(const std::vector<double>& a, const std::vector<double>& b) {
  const double eps = 1e-12;
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i] + eps;
    sb += b[i] + eps;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double at = (a[i] + eps) / sa;
    const double bt = (b[i] + eps) / sb;
    kl += at * std::log(at / bt);
  }
  return kl;
}

// Softmax over negated distances of the k nearest, pooled per label, then
// squared and renormalized.
inline std::vector<double> oracle_module(const std::vector<double>& dist, const std::vector<std::uint32_t>& labels,
                                         std::size_t k, std::size_t c) {
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
  });
  order.resize(std::min(k, order.size()));
  std::vector<double> mass(c, 0.0);
  double total = 0.0;
  for (std::size_t i : order) {
    const double w = std::exp(-dist[i]);
    mass[labels[i]] += w;
    total += w;
  }
  double sq = 0.0;
  for (double& v : mass) {
    v /= total;
    sq += v * v;
  }
  for (double& v : mass) v = v * v / sq;
  return mass;
}

inline OracleBreakdown oracle_predict(const SixPointFixture& f) {
  const std::size_t c = f.params.num_labels();
  std::vector<std::vector<double>> text_keys, prob_keys;
  for (const auto& x : f.train_x) {
    const auto h = oracle_hidden(f.params, x);
    const auto p = oracle_probs(f.params, h);
    std::vector<double> hk, pk;
    for (double v : h) hk.push_back(static_cast<float>(v));  // stores keep f32
    for (double v : p) pk.push_back(static_cast<float>(v));
    text_keys.push_back(hk);
    prob_keys.push_back(pk);
  }
  OracleBreakdown out;
  const auto h = oracle_hidden(f.params, f.query);
  out.p_model = oracle_probs(f.params, h);
  std::vector<double> d_text, d_prob;
  for (std::size_t i = 0; i < text_keys.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) s += (text_keys[i][j] - h[j]) * (text_keys[i][j] - h[j]);
    d_text.push_back(std::sqrt(s));
    d_prob.push_back(oracle_kl(prob_keys[i], out.p_model));
  }
  out.p_text_sharp = oracle_module(d_text, f.train_y, f.k, c);
  out.p_pro_sharp = oracle_module(d_prob, f.train_y, f.k, c);
  for (std::size_t j = 0; j < c; ++j) {
    out.p_knn.push_back((out.p_text_sharp[j] + out.p_pro_sharp[j]) / 2.0);
    out.p_final.push_back(f.lambda * out.p_knn[j] + (1.0 - f.lambda) * out.p_model[j]);
  }
  return out;
}

}  // namespace test
