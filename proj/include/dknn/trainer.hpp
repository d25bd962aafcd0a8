#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dknn/dataset.hpp"
#include "dknn/features.hpp"
#include "dknn/model.hpp"

namespace dknn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::size_t embed_dim = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  LLConfig ll;

  void validate() const;
};

/// First and second moment estimates, one tensor set each.
struct AdamState {
  std::uint64_t step = 0;
  Gradients m;
  Gradients v;

  static AdamState zeros_like(const ModelParams& params);
};

/// One bias-corrected Adam update over every tensor. A non-finite gradient
/// aborts before anything is modified, naming the tensor and step.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train_loss;            // mean over the training set after the epoch
  std::optional<double> dev_accuracy;  // absent without a dev set
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  /// One JSON object per line: {"epoch", "ce", "kl", "cl", "total", "dev_accuracy"}.
  std::string to_jsonl() const;
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

/// Mini-batch Adam over the mean per-example objective. Epoch e (1-based)
/// shuffles the identity order with Rng(seed ^ e); initialization uses
/// ModelParams::initialize with the seed itself.
TrainResult train(const Dataset& train_set, const Dataset* dev_set, const Featurizer& featurizer,
                  const TrainConfig& config);

/// Fraction of examples whose argmax prediction (lowest index on ties)
/// equals the gold label.
double evaluate(const ModelParams& params, const Featurizer& featurizer, const Dataset& data);

/// Mean loss over a set of pre-featurized examples.
LossBreakdown mean_loss(const ModelParams& params, const std::vector<SparseVector>& features,
                        const std::vector<std::uint32_t>& labels, const LLConfig& config);

}  // namespace dknn
