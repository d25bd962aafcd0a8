#include "dknn/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "dknn/error.hpp"
#include "dknn/simd.hpp"

namespace dknn {

void InferenceConfig::validate() const {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be >= 1");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::InvalidArgument, "lambda must lie in [0, 1]");
}

StorePair build_stores(const ModelParams& params, const std::vector<SparseVector>& features,
                       std::span<const std::uint32_t> labels, std::uint64_t fingerprint) {
  require(!features.empty(), ErrorKind::InvalidArgument, "cannot build stores from an empty training set");
  require(features.size() == labels.size(), ErrorKind::Dimension, "features/labels length mismatch");
  const std::size_t d = params.embed_dim();
  const std::size_t c = params.num_labels();
  std::vector<float> text_keys;
  std::vector<float> prob_keys;
  text_keys.reserve(features.size() * d);
  prob_keys.reserve(features.size() * c);
  for (const auto& x : features) {
    const Vector h = encode(x, params);
    const Distribution p = classify(h, params);
    for (double v : h) text_keys.push_back(static_cast<float>(v));
    for (double v : p.values()) prob_keys.push_back(static_cast<float>(v));
  }
  std::vector<std::uint32_t> values(labels.begin(), labels.end());
  return StorePair{
      RepresentationStore(Metric::L2, d, c, fingerprint, std::move(text_keys), values),
      RepresentationStore(Metric::KL, c, c, fingerprint, std::move(prob_keys), std::move(values)),
  };
}

StorePair build_stores(const ModelParams& params, const Featurizer& featurizer, const Dataset& train_set) {
  std::vector<SparseVector> features;
  std::vector<std::uint32_t> labels;
  for (const auto& ex : train_set.examples) {
    require(ex.label < params.num_labels(), ErrorKind::InvalidArgument, "training label outside the model's classes");
    features.push_back(featurizer.transform_sparse(ex.text));
    labels.push_back(ex.label);
  }
  return build_stores(params, features, labels, model_fingerprint(params));
}

std::vector<double> distances(const RepresentationStore& store, std::span<const double> q, KlOrder order) {
  require(q.size() == store.dim(), ErrorKind::Dimension,
          "query length " + std::to_string(q.size()) + " != store dim " + std::to_string(store.dim()));
  std::vector<double> out(store.size());
  if (store.metric() == Metric::L2) {
    const auto& k = simd::active();
    for (std::size_t i = 0; i < store.size(); ++i)
      out[i] = std::sqrt(k.squared_l2_f32(store.key(i).data(), q.data(), q.size()));
  } else {
    require(is_distribution(q, 1e-6), ErrorKind::InvalidArgument, "KL store query must be a probability distribution");
    for (std::size_t i = 0; i < store.size(); ++i)
      out[i] = order == KlOrder::KeyFirst ? kl_divergence(store.key(i), q) : kl_divergence(q, store.key(i));
  }
  return out;
}

std::vector<Neighbor> query(const RepresentationStore& store, std::span<const double> q, std::size_t k,
                            KlOrder order) {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be >= 1");
  require(store.size() > 0, ErrorKind::InvalidArgument, "cannot query an empty store");
  const std::vector<double> dist = distances(store, q, order);

  using Entry = std::pair<double, std::size_t>;  // (distance, index); top() is the current worst
  std::priority_queue<Entry> heap;
  const std::size_t keep = std::min(k, store.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    require(!std::isnan(dist[i]), ErrorKind::NonFinite, "distance is NaN");
    const Entry e{dist[i], i};
    if (heap.size() < keep) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }
  std::vector<Neighbor> out(heap.size());
  for (std::size_t n = out.size(); n-- > 0;) {
    const auto [d, i] = heap.top();
    heap.pop();
    out[n] = Neighbor{i, d, store.label(i)};
  }
  return out;
}

Distribution neighbor_distribution(std::span<const Neighbor> neighbors, std::size_t num_labels) {
  require(!neighbors.empty(), ErrorKind::InvalidArgument, "neighbor_distribution needs at least one neighbor");
  require(num_labels > 0, ErrorKind::Dimension, "neighbor_distribution needs c >= 1");
  double nearest = neighbors.front().distance;
  for (const auto& n : neighbors) nearest = std::min(nearest, n.distance);
  std::vector<double> mass(num_labels, 0.0);
  double total = 0.0;
  for (const auto& n : neighbors) {
    require(n.label < num_labels, ErrorKind::InvalidArgument, "neighbor label outside [0, c)");
    // exp(-d) up to a common factor exp(d_min), removed by normalization.
    const double w = std::exp(-(n.distance - nearest));
    mass[n.label] += w;
    total += w;
  }
  for (double& m : mass) m /= total;
  return Distribution::trusted(std::move(mass));
}

Distribution combine_knn(const Distribution* text_sharp, const Distribution* pro_sharp) {
  require(text_sharp || pro_sharp, ErrorKind::InvalidArgument, "combine_knn needs at least one kNN distribution");
  if (!text_sharp) return *pro_sharp;
  if (!pro_sharp) return *text_sharp;
  require(text_sharp->size() == pro_sharp->size(), ErrorKind::Dimension, "combine_knn: dimension mismatch");
  std::vector<double> out(text_sharp->size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = ((*text_sharp)[j] + (*pro_sharp)[j]) / 2.0;
  return Distribution::trusted(std::move(out));
}

Distribution interpolate(const Distribution& p_knn, const Distribution& p_model, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::InvalidArgument, "lambda must lie in [0, 1]");
  require(p_knn.size() == p_model.size(), ErrorKind::Dimension, "interpolate: dimension mismatch");
  std::vector<double> out(p_knn.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = lambda * p_knn[j] + (1.0 - lambda) * p_model[j];
  return Distribution::trusted(std::move(out));
}

PredictionBreakdown predict(const SparseVector& x, const ModelParams& params, std::uint64_t model_fingerprint,
                            const StorePair& stores, const InferenceConfig& config) {
  config.validate();
  const std::size_t c = params.num_labels();
  PredictionBreakdown out;
  const Vector h = encode(x, params);
  out.p_model = classify(h, params);

  if (config.use_text_knn) {
    require(stores.text.fingerprint() == model_fingerprint, ErrorKind::Inconsistent,
            "text store was built from a different model (fingerprint mismatch)");
    require(stores.text.dim() == h.size() && stores.text.num_labels() == c, ErrorKind::Inconsistent,
            "text store shape does not match the model");
    const auto nn = query(stores.text, h, config.k);
    out.p_text_sharp = sharpen(neighbor_distribution(nn, c).values());
  }
  if (config.use_pro_knn) {
    require(stores.prob.fingerprint() == model_fingerprint, ErrorKind::Inconsistent,
            "probability store was built from a different model (fingerprint mismatch)");
    require(stores.prob.dim() == c && stores.prob.num_labels() == c, ErrorKind::Inconsistent,
            "probability store shape does not match the model");
    const auto nn = query(stores.prob, out.p_model.values(), config.k, config.kl_order);
    out.p_pro_sharp = sharpen(neighbor_distribution(nn, c).values());
  }

  if (out.p_text_sharp || out.p_pro_sharp) {
    out.p_knn = combine_knn(out.p_text_sharp ? &*out.p_text_sharp : nullptr,
                            out.p_pro_sharp ? &*out.p_pro_sharp : nullptr);
    out.p_final = interpolate(*out.p_knn, out.p_model, config.lambda);
  } else {
    out.p_final = out.p_model;
  }
  out.label = out.p_final.argmax();
  return out;
}

PredictionBreakdown predict(std::string_view text, const ModelParams& params, const Featurizer& featurizer,
                            const StorePair& stores, const InferenceConfig& config) {
  return predict(featurizer.transform_sparse(text), params, model_fingerprint(params), stores, config);
}

}  // namespace dknn
