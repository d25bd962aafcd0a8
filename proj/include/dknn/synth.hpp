#pragma once

#include <cstddef>
#include <cstdint>

#include "dknn/dataset.hpp"

namespace dknn {

/// Seeded corpus with fine labels nested in coarse groups.
///
/// Label i belongs to group floor(i * groups / labels). Every text draws its
/// length uniformly from [min_tokens, max_tokens]; each token independently
/// comes from the label's own pool with probability label_share, from the
/// group pool with probability group_share, and from a background pool
/// otherwise. Label pools of siblings overlap through the group pool, while
/// different groups only share background tokens.
struct SynthConfig {
  std::size_t examples = 2000;
  std::size_t labels = 10;
  std::size_t groups = 3;
  std::uint64_t seed = 0;
  std::size_t min_tokens = 20;
  std::size_t max_tokens = 50;
  std::size_t label_pool = 40;
  std::size_t group_pool = 60;
  std::size_t background_pool = 500;
  double label_share = 0.08;
  double group_share = 0.30;
  /// Labels own `topics` sub-pools; an example uses one topic's tokens for
  /// its label draws, which makes each class multimodal.
  std::size_t topics = 4;

  void validate() const;
};

Dataset generate_synthetic(const SynthConfig& config);

}  // namespace dknn
