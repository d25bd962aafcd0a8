#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dknn/mathcore.hpp"

namespace dknn {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// Splits on Unicode whitespace (UTF-8), strips leading/trailing ASCII
/// punctuation from each piece, optionally ASCII-lowercases, drops empties.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

enum class FeatureMode { Hashing, Tfidf };

struct FeaturizerConfig {
  FeatureMode mode = FeatureMode::Hashing;
  std::size_t dim = 4096;  // hashing buckets; ignored by tfidf
  bool lowercase = true;
};

/// Nonzero entries of a feature vector in ascending index order.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  Vector to_dense() const;
  static SparseVector from_dense(std::span<const double> dense);
};

class Featurizer {
 public:
  /// Hashing mode ignores the corpus; tfidf mode requires it non-empty.
  static Featurizer fit(std::span<const std::string> corpus, const FeaturizerConfig& config);

  const FeaturizerConfig& config() const { return config_; }
  std::size_t dim() const;

  /// L2-normalized term counts (hashing) or tf*idf weights; zero vector for
  /// texts without known tokens.
  SparseVector transform_sparse(std::string_view text) const;
  Vector transform(std::string_view text) const { return transform_sparse(text).to_dense(); }

  /// tfidf only: vocabulary in lexicographic order and the idf per entry.
  const std::map<std::string, std::uint32_t>& vocabulary() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }

  void save(std::ostream& out) const;
  static Featurizer load(std::istream& in);

 private:
  FeaturizerConfig config_;
  std::map<std::string, std::uint32_t> vocab_;
  std::vector<double> idf_;
};

}  // namespace dknn
