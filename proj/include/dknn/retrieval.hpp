#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dknn/dataset.hpp"
#include "dknn/features.hpp"
#include "dknn/mathcore.hpp"
#include "dknn/model.hpp"
#include "dknn/store.hpp"

namespace dknn {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
  std::uint32_t label = 0;

  bool operator==(const Neighbor&) const = default;
};

/// Which side of the KL distance the stored key occupies.
enum class KlOrder { KeyFirst, QueryFirst };

struct InferenceConfig {
  std::size_t k = 16;
  double lambda = 0.5;
  bool use_text_knn = true;
  bool use_pro_knn = true;
  KlOrder kl_order = KlOrder::KeyFirst;

  void validate() const;
};

/// S_tr holds (h_i, y_i) under L2, S_pr holds (p_i, y_i) under KL.
struct StorePair {
  RepresentationStore text;
  RepresentationStore prob;
};

/// One forward pass per training example, in dataset order.
StorePair build_stores(const ModelParams& params, const Featurizer& featurizer, const Dataset& train_set);
StorePair build_stores(const ModelParams& params, const std::vector<SparseVector>& features,
                       std::span<const std::uint32_t> labels, std::uint64_t fingerprint);

/// Exact top-min(k, N) by ascending (distance, index): L2 for L2 stores,
/// kl_divergence(key, query) for KL stores (or the reverse with QueryFirst).
/// Bounded max-heap over a linear scan.
std::vector<Neighbor> query(const RepresentationStore& store, std::span<const double> q, std::size_t k,
                            KlOrder order = KlOrder::KeyFirst);

/// Distance from a query to every key, as used by query().
std::vector<double> distances(const RepresentationStore& store, std::span<const double> q,
                              KlOrder order = KlOrder::KeyFirst);

/// Softmax over negative distances, mass pooled per label.
Distribution neighbor_distribution(std::span<const Neighbor> neighbors, std::size_t num_labels);

/// Elementwise mean of the sharpened distributions; with one side absent the
/// other is returned unchanged.
Distribution combine_knn(const Distribution* text_sharp, const Distribution* pro_sharp);

/// lambda * p_knn + (1 - lambda) * p_model.
Distribution interpolate(const Distribution& p_knn, const Distribution& p_model, double lambda);

struct PredictionBreakdown {
  Distribution p_model;
  std::optional<Distribution> p_text_sharp;
  std::optional<Distribution> p_pro_sharp;
  std::optional<Distribution> p_knn;
  Distribution p_final;
  std::size_t label = 0;  // argmax of p_final
};

/// forward -> query each enabled store -> neighbor distribution -> sharpen ->
/// combine -> interpolate. Refuses stores whose fingerprint differs from the
/// model's.
PredictionBreakdown predict(std::string_view text, const ModelParams& params, const Featurizer& featurizer,
                            const StorePair& stores, const InferenceConfig& config);

/// Same pipeline from pre-computed features; `model_fingerprint` is checked
/// against both stores.
PredictionBreakdown predict(const SparseVector& x, const ModelParams& params, std::uint64_t model_fingerprint,
                            const StorePair& stores, const InferenceConfig& config);

}  // namespace dknn
