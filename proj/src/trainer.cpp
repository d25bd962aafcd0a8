#include "dknn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "dknn/error.hpp"
#include "dknn/rng.hpp"
#include "dknn/simd.hpp"

namespace dknn {

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorKind::InvalidArgument, "batch_size must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorKind::InvalidArgument,
          "learning_rate must be > 0");
  require(embed_dim >= 1, ErrorKind::InvalidArgument, "embed_dim must be >= 1");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0, ErrorKind::InvalidArgument,
          "adam betas must lie in [0, 1)");
  require(adam.eps > 0.0, ErrorKind::InvalidArgument, "adam eps must be > 0");
  ll.validate();
}

AdamState AdamState::zeros_like(const ModelParams& params) {
  AdamState s;
  s.m = ModelParams::zeros(params.feature_dim(), params.embed_dim(), params.num_labels());
  s.v = s.m;
  return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const TrainConfig& config) {
  const std::uint64_t step = state.step + 1;
  grads.for_each_tensor([&](const char* name, std::span<const double> g) {
    for (double x : g)
      require(std::isfinite(x), ErrorKind::NonFinite,
              std::string("non-finite gradient in tensor ") + name + " at step " + std::to_string(step));
  });
  state.step = step;

  simd::AdamCoefficients c{};
  c.beta1 = config.adam.beta1;
  c.beta2 = config.adam.beta2;
  c.one_minus_beta1 = 1.0 - config.adam.beta1;
  c.one_minus_beta2 = 1.0 - config.adam.beta2;
  c.bias_correction1 = 1.0 - std::pow(config.adam.beta1, static_cast<double>(step));
  c.bias_correction2 = 1.0 - std::pow(config.adam.beta2, static_cast<double>(step));
  c.learning_rate = config.learning_rate;
  c.eps = config.adam.eps;

  const auto& k = simd::active();
  const auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                          std::span<double> v) { k.adam_update(p.data(), g.data(), m.data(), v.data(), p.size(), c); };
  update(params.w1.flat(), grads.w1.flat(), state.m.w1.flat(), state.v.w1.flat());
  update(params.b1, grads.b1, state.m.b1, state.v.b1);
  update(params.w2.flat(), grads.w2.flat(), state.m.w2.flat(), state.v.w2.flat());
  update(params.b2, grads.b2, state.m.b2, state.v.b2);
  update(params.labels.flat(), grads.labels.flat(), state.m.labels.flat(), state.v.labels.flat());
}

std::string TrainHistory::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["ce"] = e.train_loss.ce;
    j["kl"] = e.train_loss.kl;
    j["cl"] = e.train_loss.cl;
    j["total"] = e.train_loss.total;
    j["dev_accuracy"] = e.dev_accuracy ? nlohmann::ordered_json(*e.dev_accuracy) : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

LossBreakdown mean_loss(const ModelParams& params, const std::vector<SparseVector>& features,
                        const std::vector<std::uint32_t>& labels, const LLConfig& config) {
  LossBreakdown sum;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const LossBreakdown l = forward(features[i], labels[i], params, config).loss;
    sum.ce += l.ce;
    sum.kl += l.kl;
    sum.cl += l.cl;
  }
  const double n = static_cast<double>(std::max<std::size_t>(features.size(), 1));
  LossBreakdown mean{sum.ce / n, sum.kl / n, sum.cl / n, 0.0};
  mean.total = mean.ce + mean.kl + mean.cl;
  return mean;
}

namespace {

std::vector<SparseVector> featurize(const Featurizer& featurizer, const Dataset& data) {
  std::vector<SparseVector> out;
  out.reserve(data.size());
  for (const auto& ex : data.examples) out.push_back(featurizer.transform_sparse(ex.text));
  return out;
}

std::vector<std::uint32_t> gold_labels(const Dataset& data) {
  std::vector<std::uint32_t> out;
  out.reserve(data.size());
  for (const auto& ex : data.examples) out.push_back(ex.label);
  return out;
}

void zero(Gradients& g) {
  g.for_each_tensor([](const char*, std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
}

}  // namespace

TrainResult train(const Dataset& train_set, const Dataset* dev_set, const Featurizer& featurizer,
                  const TrainConfig& config) {
  config.validate();
  require(train_set.size() > 0, ErrorKind::InvalidArgument, "training set is empty");
  require(train_set.num_labels() >= 1, ErrorKind::InvalidArgument, "training set has no labels");
  train_set.validate();

  const auto features = featurize(featurizer, train_set);
  const auto labels = gold_labels(train_set);

  TrainResult result;
  result.params = ModelParams::initialize(featurizer.dim(), config.embed_dim, train_set.num_labels(), config.seed);
  ModelParams& params = result.params;
  AdamState state = AdamState::zeros_like(params);
  Gradients grads = state.m;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed ^ static_cast<std::uint64_t>(epoch));
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      zero(grads);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const LossBreakdown l = accumulate_gradients(features[i], labels[i], params, config.ll, scale, grads);
        require(std::isfinite(l.total), ErrorKind::NonFinite,
                "loss became non-finite in epoch " + std::to_string(epoch));
      }
      adam_step(params, grads, state, config);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = mean_loss(params, features, labels, config.ll);
    require(std::isfinite(record.train_loss.total), ErrorKind::NonFinite,
            "loss became non-finite in epoch " + std::to_string(epoch));
    if (dev_set && dev_set->size() > 0) record.dev_accuracy = evaluate(params, featurizer, *dev_set);
    result.history.epochs.push_back(record);
  }
  return result;
}

double evaluate(const ModelParams& params, const Featurizer& featurizer, const Dataset& data) {
  require(data.size() > 0, ErrorKind::InvalidArgument, "cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for (const auto& ex : data.examples) {
    require(ex.label < params.num_labels(), ErrorKind::InvalidArgument, "dataset label outside the model's classes");
    const Vector h = encode(featurizer.transform_sparse(ex.text), params);
    if (classify(h, params).argmax() == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace dknn
