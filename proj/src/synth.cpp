#include "dknn/synth.hpp"

#include <string>

#include "dknn/error.hpp"
#include "dknn/rng.hpp"

namespace dknn {

void SynthConfig::validate() const {
  require(examples >= 2, ErrorKind::InvalidArgument, "synthetic corpus needs at least 2 examples");
  require(labels >= 1 && groups >= 1 && groups <= labels, ErrorKind::InvalidArgument,
          "synthetic corpus needs 1 <= groups <= labels");
  require(min_tokens >= 1 && min_tokens <= max_tokens, ErrorKind::InvalidArgument, "token length range is empty");
  require(topics >= 1 && label_pool >= topics, ErrorKind::InvalidArgument, "label_pool must be >= topics >= 1");
  require(group_pool >= 1 && background_pool >= 1, ErrorKind::InvalidArgument, "token pools must be non-empty");
  require(label_share >= 0.0 && group_share >= 0.0 && label_share + group_share <= 1.0, ErrorKind::InvalidArgument,
          "token source shares must be >= 0 and sum to at most 1");
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  Dataset data;
  for (std::size_t g = 0; g < config.groups; ++g) data.groups.push_back("group" + std::to_string(g));
  for (std::size_t i = 0; i < config.labels; ++i) {
    const std::size_t g = i * config.groups / config.labels;
    data.labels.push_back("group" + std::to_string(g) + ".label" + std::to_string(i));
    data.coarse_group.push_back(static_cast<std::uint32_t>(g));
  }

  const std::size_t topic_size = config.label_pool / config.topics;
  Rng rng(config.seed);
  data.examples.reserve(config.examples);
  for (std::size_t n = 0; n < config.examples; ++n) {
    const auto label = static_cast<std::uint32_t>(rng.below(config.labels));
    const auto group = data.coarse_group[label];
    const std::size_t topic = rng.below(config.topics);
    const std::size_t length = config.min_tokens + rng.below(config.max_tokens - config.min_tokens + 1);
    std::string text;
    for (std::size_t t = 0; t < length; ++t) {
      const double u = rng.uniform();
      std::string token;
      if (u < config.label_share) {
        token = "l" + std::to_string(label) + "w" + std::to_string(topic * topic_size + rng.below(topic_size));
      } else if (u < config.label_share + config.group_share) {
        token = "g" + std::to_string(group) + "w" + std::to_string(rng.below(config.group_pool));
      } else {
        token = "w" + std::to_string(rng.below(config.background_pool));
      }
      if (!text.empty()) text += ' ';
      text += token;
    }
    data.examples.push_back({std::move(text), label});
  }
  return data;
}

}  // namespace dknn
