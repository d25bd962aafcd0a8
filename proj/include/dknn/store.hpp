#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dknn {

enum class Metric : std::uint8_t { L2 = 0, KL = 1 };

/// Immutable (key, label) memory. Keys are f32 rows; KL stores hold
/// probability rows.
///
/// File layout, little-endian, no padding:
///   "DKNS" | u16 version=1 | u8 metric | u32 dim | u32 N | u32 c |
///   u64 model fingerprint | N*dim f32 keys (row-major) | N u32 labels
class RepresentationStore {
 public:
  RepresentationStore() = default;
  RepresentationStore(Metric metric, std::size_t dim, std::size_t num_labels, std::uint64_t fingerprint,
                      std::vector<float> keys, std::vector<std::uint32_t> labels);

  Metric metric() const { return metric_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t num_labels() const { return num_labels_; }
  std::uint64_t fingerprint() const { return fingerprint_; }

  std::span<const float> key(std::size_t i) const { return {keys_.data() + i * dim_, dim_}; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }
  std::span<const float> keys() const { return keys_; }
  std::span<const std::uint32_t> labels() const { return labels_; }

  std::string serialize() const;
  static RepresentationStore parse(std::string_view bytes);
  void write(const std::filesystem::path& path) const;
  static RepresentationStore read(const std::filesystem::path& path);

  bool operator==(const RepresentationStore&) const = default;

 private:
  Metric metric_ = Metric::L2;
  std::size_t dim_ = 0;
  std::size_t num_labels_ = 0;
  std::uint64_t fingerprint_ = 0;
  std::vector<float> keys_;
  std::vector<std::uint32_t> labels_;
};

/// Tab-separated dump: header "label\tk0\t...", then one row per entry with
/// shortest round-trip f32 text for each key component.
std::string export_tsv(const RepresentationStore& store);

}  // namespace dknn
