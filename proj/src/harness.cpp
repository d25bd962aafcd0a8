#include "dknn/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "dknn/error.hpp"
#include "dknn/rng.hpp"

namespace dknn {

void ExperimentConfig::validate() const {
  require(repeats >= 1, ErrorKind::InvalidArgument, "repeats must be >= 1");
  require(train_ratio > 0.0 && train_ratio < 1.0, ErrorKind::InvalidArgument, "train_ratio must lie in (0, 1)");
  require(noise_ratio >= 0.0 && noise_ratio <= 1.0, ErrorKind::InvalidArgument, "noise_ratio must lie in [0, 1]");
  require(data.size() >= 2, ErrorKind::InvalidArgument, "dataset needs at least 2 examples");
  data.validate();
  train.validate();
  inference.validate();
}

namespace {

std::string format_value(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::size_t worker_count(const ExperimentConfig& config) {
  std::size_t threads = config.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("DKNN_THREADS")) threads = std::strtoul(env, nullptr, 10);
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::min(threads, config.repeats);
}

// Runs fn(r) for r in [1, repeats] on up to `threads` workers; results are
// returned in repeat order and the first failing repeat's exception rethrown.
template <typename Fn>
auto run_repeats(std::size_t repeats, std::size_t threads, Fn fn) {
  using Result = decltype(fn(std::size_t{1}));
  std::vector<Result> results(repeats);
  std::vector<std::exception_ptr> errors(repeats);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < repeats; i = next++) {
      try {
        results[i] = fn(i + 1);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

struct RepeatData {
  SplitIndices split;
  Featurizer featurizer;
  Dataset train;
  std::vector<SparseVector> train_x;
  std::vector<std::uint32_t> train_y;
  std::vector<SparseVector> test_x;
  std::vector<std::uint32_t> test_y;
};

RepeatData prepare(const ExperimentConfig& config, std::size_t repeat, double noise_ratio) {
  const std::uint64_t split_seed = config.seed + repeat;
  RepeatData d;
  d.split = split_indices(config.data.size(), config.train_ratio, split_seed);
  d.train = config.data.subset(d.split.train);
  Dataset test = config.data.subset(d.split.test);
  if (noise_ratio > 0.0) {
    const std::uint64_t noise_seed = derive_seed(split_seed, kNoiseSeedTag);
    d.train = inject_noise(d.train, noise_ratio, noise_seed);
    if (config.noise_test) test = inject_noise(test, noise_ratio, noise_seed ^ 1);
  }
  d.featurizer = Featurizer::fit(d.train.texts(), config.features);
  for (const auto& ex : d.train.examples) {
    d.train_x.push_back(d.featurizer.transform_sparse(ex.text));
    d.train_y.push_back(ex.label);
  }
  for (const auto& ex : test.examples) {
    d.test_x.push_back(d.featurizer.transform_sparse(ex.text));
    d.test_y.push_back(ex.label);
  }
  return d;
}

struct TrainedModel {
  ModelParams params;
  std::uint64_t fingerprint = 0;
  StorePair stores;
};

TrainedModel fit(const ExperimentConfig& config, const RepeatData& d, std::size_t repeat, const LLConfig& ll) {
  TrainConfig tc = config.train;
  tc.ll = ll;
  tc.seed = derive_seed(config.seed + repeat, kTrainSeedTag);
  TrainedModel m;
  m.params = train(d.train, nullptr, d.featurizer, tc).params;
  m.fingerprint = model_fingerprint(m.params);
  m.stores = build_stores(m.params, d.train_x, d.train_y, m.fingerprint);
  return m;
}

InferenceConfig model_only(InferenceConfig ic) {
  ic.use_text_knn = false;
  ic.use_pro_knn = false;
  return ic;
}

double accuracy(const TrainedModel& m, const RepeatData& d, const InferenceConfig& ic) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < d.test_x.size(); ++i)
    if (predict(d.test_x[i], m.params, m.fingerprint, m.stores, ic).label == d.test_y[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(d.test_x.size());
}

struct RepeatOutcome {
  std::uint64_t split_hash = 0;
  std::vector<double> accuracies;                // one per row
  std::vector<std::vector<double>> extras;       // one list per row
  double seconds = 0.0;
};

ExperimentReport assemble(std::string title, const std::vector<std::string>& names,
                          const std::vector<std::string>& extra_names, const std::vector<RepeatOutcome>& outcomes) {
  ExperimentReport report;
  report.title = std::move(title);
  for (std::size_t row = 0; row < names.size(); ++row) {
    ReportRow r;
    r.config = names[row];
    for (const auto& o : outcomes) {
      r.repeats.push_back(o.accuracies[row]);
      r.splits.push_back(o.split_hash);
    }
    if (!extra_names.empty()) {
      for (std::size_t e = 0; e < extra_names.size(); ++e) {
        Series s{extra_names[e], {}};
        for (const auto& o : outcomes) s.values.push_back(o.extras[row][e]);
        r.extra.push_back(std::move(s));
      }
    }
    finalize(r);
    report.rows.push_back(std::move(r));
  }
  for (const auto& o : outcomes) report.wall_seconds.push_back(o.seconds);
  return report;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = sample_mean(v);
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

void finalize(ReportRow& row) {
  row.mean = sample_mean(row.repeats);
  row.std = sample_std(row.repeats);
}

const ReportRow& ExperimentReport::row(const std::string& config) const {
  for (const auto& r : rows)
    if (r.config == config) return r;
  fail(ErrorKind::InvalidArgument, "report has no row '" + config + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::vector<NamedInference>& configs) {
  config.validate();
  require(!configs.empty(), ErrorKind::InvalidArgument, "run_experiment needs at least one inference configuration");
  for (const auto& c : configs)
    if (!c.model_only) c.config.validate();
  const auto outcomes = run_repeats(config.repeats, worker_count(config), [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    const RepeatData d = prepare(config, r, config.noise_ratio);
    const TrainedModel m = fit(config, d, r, config.train.ll);
    RepeatOutcome o;
    o.split_hash = d.split.hash();
    for (const auto& c : configs)
      o.accuracies.push_back(accuracy(m, d, c.model_only ? model_only(c.config) : c.config));
    o.seconds = seconds_since(start);
    return o;
  });
  std::vector<std::string> names;
  for (const auto& c : configs) names.push_back(c.name);
  return assemble("experiment", names, {}, outcomes);
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, {{"model", config.inference, true}, {"dknn", config.inference, false}});
}

ExperimentReport ablation_suite(const ExperimentConfig& config) {
  config.validate();
  LLConfig ce = config.train.ll;
  ce.enable_kl = false;
  ce.enable_cl = false;
  LLConfig ll = config.train.ll;
  ll.enable_kl = true;
  ll.enable_cl = true;
  LLConfig ce_kl = ll;
  ce_kl.enable_cl = false;
  LLConfig ce_cl = ll;
  ce_cl.enable_kl = false;

  const InferenceConfig both = [&] {
    InferenceConfig ic = config.inference;
    ic.use_text_knn = ic.use_pro_knn = true;
    return ic;
  }();
  InferenceConfig no_pro = both;
  no_pro.use_pro_knn = false;
  InferenceConfig no_text = both;
  no_text.use_text_knn = false;

  const auto outcomes = run_repeats(config.repeats, worker_count(config), [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    const RepeatData d = prepare(config, r, config.noise_ratio);
    RepeatOutcome o;
    o.split_hash = d.split.hash();
    {
      const TrainedModel m = fit(config, d, r, ce);
      o.accuracies.push_back(accuracy(m, d, model_only(both)));
      o.accuracies.push_back(accuracy(m, d, both));
    }
    {
      const TrainedModel m = fit(config, d, r, ll);
      o.accuracies.push_back(accuracy(m, d, model_only(both)));
      o.accuracies.push_back(accuracy(m, d, both));
      o.accuracies.push_back(accuracy(m, d, no_pro));
      o.accuracies.push_back(accuracy(m, d, no_text));
    }
    o.accuracies.push_back(accuracy(fit(config, d, r, ce_kl), d, model_only(both)));
    o.accuracies.push_back(accuracy(fit(config, d, r, ce_cl), d, model_only(both)));
    o.seconds = seconds_since(start);
    return o;
  });
  return assemble("ablation",
                  {"base", "base+dknn", "ll", "ll+dknn", "ll+dknn w/o pro-knn", "ll+dknn w/o text-knn", "ce+kl",
                   "ce+cl"},
                  {}, outcomes);
}

ExperimentReport sweep(const ExperimentConfig& config, SweepParam param, const std::vector<double>& values) {
  config.validate();
  require(!values.empty(), ErrorKind::InvalidArgument, "sweep needs at least one value");
  std::vector<std::string> names;
  for (double v : values) {
    switch (param) {
      case SweepParam::K:
        require(v >= 0.0 && v == std::floor(v), ErrorKind::InvalidArgument,
                "k sweep values must be non-negative integers, got " + format_value(v));
        names.push_back("k=" + format_value(v));
        break;
      case SweepParam::Lambda:
        require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument,
                "lambda sweep values must lie in [0, 1], got " + format_value(v));
        names.push_back("lambda=" + format_value(v));
        break;
      case SweepParam::NoiseRatio:
        require(v >= 0.0 && v <= 1.0, ErrorKind::InvalidArgument,
                "noise ratios must lie in [0, 1], got " + format_value(v));
        names.push_back("noise=" + format_value(v));
        break;
    }
  }

  const auto outcomes = run_repeats(config.repeats, worker_count(config), [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    RepeatOutcome o;
    if (param == SweepParam::NoiseRatio) {
      for (double v : values) {
        const RepeatData d = prepare(config, r, v);
        o.split_hash = d.split.hash();
        const TrainedModel m = fit(config, d, r, config.train.ll);
        const double base = accuracy(m, d, model_only(config.inference));
        const double augmented = accuracy(m, d, config.inference);
        o.accuracies.push_back(augmented);
        o.extras.push_back({base, augmented - base});
      }
    } else {
      const RepeatData d = prepare(config, r, config.noise_ratio);
      o.split_hash = d.split.hash();
      const TrainedModel m = fit(config, d, r, config.train.ll);
      for (double v : values) {
        InferenceConfig ic = config.inference;
        if (param == SweepParam::K) {
          if (v == 0.0) ic = model_only(ic);
          else ic.k = static_cast<std::size_t>(v);
        } else {
          ic.lambda = v;
          if (v == 0.0) ic = model_only(ic);
        }
        o.accuracies.push_back(accuracy(m, d, ic));
      }
    }
    o.seconds = seconds_since(start);
    return o;
  });
  const std::vector<std::string> extra =
      param == SweepParam::NoiseRatio ? std::vector<std::string>{"model", "gain"} : std::vector<std::string>{};
  const char* title = param == SweepParam::K ? "sweep k" : param == SweepParam::Lambda ? "sweep lambda" : "sweep noise";
  return assemble(title, names, extra, outcomes);
}

}  // namespace dknn
