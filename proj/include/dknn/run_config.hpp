#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dknn/features.hpp"
#include "dknn/retrieval.hpp"
#include "dknn/synth.hpp"
#include "dknn/trainer.hpp"

namespace dknn {

/// Every setting a command may read, addressable by key.
///
/// File grammar: one `key = value` per line, surrounding whitespace ignored,
/// blank lines and lines starting with '#' skipped. Booleans accept
/// on/off/true/false/1/0. A later assignment of the same key wins, and
/// command-line flags are applied after the file.
struct RunConfig {
  // paths
  std::string data;
  std::string dev;
  std::string model;
  std::string stores;
  std::string out;

  std::uint64_t seed = 0;
  FeaturizerConfig features;
  TrainConfig train;
  InferenceConfig inference;

  // experiments
  std::size_t repeats = 5;
  double train_ratio = 0.7;
  double noise_ratio = 0.0;
  bool noise_test = false;
  std::size_t threads = 0;

  SynthConfig synth;

  /// Sets one key; unknown keys and unparsable values are InvalidArgument.
  void set(std::string_view key, std::string_view value);

  /// Applies a key=value file in order.
  void load_file(const std::filesystem::path& path);
  void load_text(std::string_view text, std::string_view origin = "config");

  void validate() const;

  /// Effective configuration in file grammar, keys in a fixed order.
  std::string to_text() const;

  /// Training config with the top-level seed.
  TrainConfig train_config() const;
  SynthConfig synth_config() const;
};

}  // namespace dknn
