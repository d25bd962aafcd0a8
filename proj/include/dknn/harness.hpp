#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dknn/dataset.hpp"
#include "dknn/features.hpp"
#include "dknn/retrieval.hpp"
#include "dknn/trainer.hpp"

namespace dknn {

struct ExperimentConfig {
  Dataset data;
  FeaturizerConfig features;
  TrainConfig train;
  InferenceConfig inference;
  std::size_t repeats = 5;
  double train_ratio = 0.7;
  std::uint64_t seed = 0;
  double noise_ratio = 0.0;  // applied to the training partition
  bool noise_test = false;   // also corrupt the test partition
  std::size_t threads = 0;   // 0: DKNN_THREADS, else hardware concurrency

  void validate() const;
};

/// Named per-repeat series attached to a row besides its main accuracy.
struct Series {
  std::string name;
  std::vector<double> values;
};

struct ReportRow {
  std::string config;
  std::vector<double> repeats;        // accuracy per repeat
  std::vector<std::uint64_t> splits;  // split hash per repeat
  std::vector<Series> extra;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single repeat
};

struct ExperimentReport {
  std::string title;
  std::vector<ReportRow> rows;
  std::vector<double> wall_seconds;  // per repeat; only serialized on request

  const ReportRow& row(const std::string& config) const;

  /// {"title", "rows": [{"config", "mean", "std", "repeats", "splits", ...}]}
  std::string to_json(bool include_timing = false) const;
  std::string to_table() const;
};

double sample_mean(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

/// Fills mean/std from the repeats.
void finalize(ReportRow& row);

/// Inference configurations evaluated by run_experiment, by name.
struct NamedInference {
  std::string name;
  InferenceConfig config;
  bool model_only = false;
};

/// Per repeat r in 1..R: split with seed + r, optional noise, train with
/// config.train, build stores, evaluate every requested configuration on the
/// test split. Rows follow `configs` order.
ExperimentReport run_experiment(const ExperimentConfig& config, const std::vector<NamedInference>& configs);

/// "model" (no retrieval) and "dknn" (config.inference).
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Rows: base, base+dknn, ll, ll+dknn, ll+dknn w/o pro-knn,
/// ll+dknn w/o text-knn, ce+kl, ce+cl. All rows share splits and seeds.
ExperimentReport ablation_suite(const ExperimentConfig& config);

enum class SweepParam { K, Lambda, NoiseRatio };

/// One row per value, shared splits and seeds. k = 0 and lambda = 0 rows are
/// the pure model. Noise rows carry "model" and "gain" series next to the
/// retrieval-augmented accuracy.
ExperimentReport sweep(const ExperimentConfig& config, SweepParam param, const std::vector<double>& values);

/// Seed tags for per-repeat sub-seeds.
inline constexpr std::uint64_t kTrainSeedTag = 0x7472'6169'6e00'0000ULL;  // "train"
inline constexpr std::uint64_t kNoiseSeedTag = 0x6e6f'6973'6500'0000ULL;  // "noise"

}  // namespace dknn
