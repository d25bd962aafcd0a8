#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dknn {

struct Example {
  std::string text;
  std::uint32_t label = 0;

  bool operator==(const Example&) const = default;
};

/// Labeled texts plus the label vocabulary and an optional label -> coarse
/// group mapping.
struct Dataset {
  std::vector<Example> examples;
  std::vector<std::string> labels;
  std::vector<std::string> groups;           // coarse group names; empty when ungrouped
  std::vector<std::uint32_t> coarse_group;   // per label; empty when ungrouped

  std::size_t size() const { return examples.size(); }
  std::size_t num_labels() const { return labels.size(); }
  bool has_groups() const { return !coarse_group.empty(); }

  /// Examples at the given positions, sharing vocabulary and grouping.
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::string> texts() const;
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

enum class DatasetFormat { Jsonl, Csv };

/// ".csv" means CSV, anything else JSONL.
DatasetFormat format_from_path(const std::filesystem::path& path);

/// Labels are indexed in first-occurrence order unless `fixed_labels` is
/// given, in which case that vocabulary is used and unknown labels are errors.
Dataset parse_dataset(std::string_view contents, DatasetFormat format,
                      const std::vector<std::string>* fixed_labels = nullptr);
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const std::vector<std::string>* fixed_labels = nullptr);

std::string to_jsonl(const Dataset& data);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  /// FNV-1a over both index lists; equal hashes identify equal partitions.
  std::uint64_t hash() const;
};

/// Seeded Fisher-Yates permutation of 0..n-1, train = prefix of floor(ratio n).
SplitIndices split_indices(std::size_t n, double train_ratio, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& data, double train_ratio, std::uint64_t seed);

/// Relabels floor(ratio N) examples chosen uniformly without replacement; each
/// gets a uniformly drawn different label from its coarse group (any other
/// label when ungrouped). The input is not modified.
Dataset inject_noise(const Dataset& data, double noise_ratio, std::uint64_t seed);

}  // namespace dknn
