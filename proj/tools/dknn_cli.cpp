#include <CLI11.hpp>
#include <charconv>
#include <memory>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "dknn/binary_io.hpp"
#include "dknn/error.hpp"
#include "dknn/harness.hpp"
#include "dknn/retrieval.hpp"
#include "dknn/run_config.hpp"
#include "dknn/synth.hpp"
#include "dknn/trainer.hpp"

namespace fs = std::filesystem;
using namespace dknn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInconsistent = 3;
constexpr int kExitCorrupt = 4;

// Flags that map one-to-one onto config keys.
struct KeyOption {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

struct KeySwitch {
  std::string key;
  std::string value;  // assigned when the flag is present
  CLI::Option* option = nullptr;
};

// Flags bound to one subcommand; resolve() applies the config file, then
// --set overrides, then the dedicated flags.
class Bindings {
 public:
  explicit Bindings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_file_, "key=value config file applied before flags");
    app_->add_option("--set", sets_, "override any config key, key=value (repeatable)");
    app_->add_option("--seed", seed_, "master seed");
    seed_opt_ = app_->get_option("--seed");
  }

  Bindings& key(const std::string& flag, const std::string& key, const std::string& help) {
    auto& slot = options_.emplace_back(std::make_unique<KeyOption>());
    slot->key = key;
    slot->option = app_->add_option(flag, slot->value, help);
    return *this;
  }

  Bindings& toggle(const std::string& flag, const std::string& key, const std::string& value, const std::string& help) {
    auto& slot = switches_.emplace_back(std::make_unique<KeySwitch>());
    slot->key = key;
    slot->value = value;
    slot->option = app_->add_flag(flag, help);
    return *this;
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_file_.empty()) config.load_file(config_file_);
    for (const auto& s : sets_) {
      const auto eq = s.find('=');
      require(eq != std::string::npos, ErrorKind::InvalidArgument, "--set expects key=value, got '" + s + "'");
      config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed_opt_->count() > 0) config.set("seed", seed_);
    for (const auto& o : options_)
      if (o->option->count() > 0) config.set(o->key, o->value);
    for (const auto& s : switches_)
      if (s->option->count() > 0) config.set(s->key, s->value);
    config.validate();
    return config;
  }

 private:
  CLI::App* app_;
  std::string config_file_;
  std::vector<std::string> sets_;
  std::string seed_;
  CLI::Option* seed_opt_ = nullptr;
  std::vector<std::unique_ptr<KeyOption>> options_;
  std::vector<std::unique_ptr<KeySwitch>> switches_;
};

void add_training_flags(Bindings& b) {
  b.key("--rho", "rho", "contrastive margin")
      .key("--ll", "ll", "label distribution learning on|off")
      .key("--epochs", "epochs", "training epochs")
      .key("--features", "features", "hashing|tfidf");
}

void add_inference_flags(Bindings& b) {
  b.key("--k", "k", "neighbors per store")
      .key("--lambda", "lambda", "interpolation weight of the kNN distribution")
      .toggle("--no-text-knn", "text_knn", "off", "disable the embedding store")
      .toggle("--no-pro-knn", "pro_knn", "off", "disable the probability store");
}

void add_experiment_flags(Bindings& b) {
  b.key("--data", "data", "dataset (.jsonl or .csv)")
      .key("--out", "out", "output directory")
      .key("--repeats", "repeats", "paired repeats")
      .key("--noise-ratio", "noise_ratio", "training label noise")
      .toggle("--noise-test", "noise_test", "on", "also corrupt test labels");
  add_training_flags(b);
  add_inference_flags(b);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    require(ec == std::errc{} && ptr == item.data() + item.size() && !item.empty(), ErrorKind::InvalidArgument,
            "invalid " + what + " entry '" + item + "'");
    out.push_back(v);
  }
  require(!out.empty(), ErrorKind::InvalidArgument, what + " list is empty");
  return out;
}

std::string require_path(const std::string& value, const std::string& flag) {
  require(!value.empty(), ErrorKind::InvalidArgument, flag + " is required");
  return value;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) { write_file(path, text); }

Dataset load_data(const std::string& path, const std::vector<std::string>* labels = nullptr) {
  return load_dataset(path, format_from_path(path), labels);
}

void save_featurizer(const fs::path& path, const Featurizer& f) {
  std::ostringstream out;
  f.save(out);
  write_text(path, out.str());
}

Featurizer load_featurizer(const fs::path& path) {
  std::istringstream in(read_file(path));
  return Featurizer::load(in);
}

void save_labels(const fs::path& path, const Dataset& data) {
  nlohmann::ordered_json j;
  j["labels"] = data.labels;
  write_text(path, j.dump() + "\n");
}

std::vector<std::string> load_labels(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text).at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Corrupt, "corrupt label file " + path.string() + ": " + e.what());
  }
}

struct ModelDir {
  ModelParams params;
  Featurizer featurizer;
  std::vector<std::string> labels;
};

ModelDir load_model_dir(const fs::path& dir) {
  ModelDir m;
  m.params = read_checkpoint(dir / "model.dknm");
  m.featurizer = load_featurizer(dir / "featurizer.txt");
  m.labels = load_labels(dir / "labels.json");
  require(m.labels.size() == m.params.num_labels(), ErrorKind::Inconsistent,
          "labels.json lists " + std::to_string(m.labels.size()) + " labels but the checkpoint has " +
              std::to_string(m.params.num_labels()));
  require(m.featurizer.dim() == m.params.feature_dim(), ErrorKind::Inconsistent,
          "featurizer dimension does not match the checkpoint");
  return m;
}

int cmd_train(const RunConfig& config) {
  const Dataset train_set = load_data(require_path(config.data, "--data"));
  const fs::path out = require_path(config.out, "--out");
  Dataset dev_set;
  if (!config.dev.empty()) dev_set = load_data(config.dev, &train_set.labels);
  const Featurizer featurizer = Featurizer::fit(train_set.texts(), config.features);
  const TrainResult result =
      train(train_set, config.dev.empty() ? nullptr : &dev_set, featurizer, config.train_config());
  ensure_dir(out);
  write_checkpoint(out / "model.dknm", result.params);
  save_featurizer(out / "featurizer.txt", featurizer);
  save_labels(out / "labels.json", train_set);
  write_text(out / "history.jsonl", result.history.to_jsonl());
  write_text(out / "config.txt", config.to_text());
  return 0;
}

int cmd_build_store(const RunConfig& config) {
  const ModelDir m = load_model_dir(require_path(config.model, "--model"));
  const Dataset data = load_data(require_path(config.data, "--data"), &m.labels);
  const fs::path out = require_path(config.out, "--out");
  const StorePair stores = build_stores(m.params, m.featurizer, data);
  ensure_dir(out);
  stores.text.write(out / "text.dkns");
  stores.prob.write(out / "prob.dkns");
  write_text(out / "config.txt", config.to_text());
  return 0;
}

nlohmann::ordered_json breakdown_json(const PredictionBreakdown& p, const std::vector<std::string>& labels) {
  nlohmann::ordered_json j;
  j["p_model"] = p.p_model.vec();
  if (p.p_text_sharp) j["p_text_sharp"] = p.p_text_sharp->vec();
  if (p.p_pro_sharp) j["p_pro_sharp"] = p.p_pro_sharp->vec();
  if (p.p_knn) j["p_knn"] = p.p_knn->vec();
  j["p_final"] = p.p_final.vec();
  j["label"] = p.label;
  j["label_name"] = labels[p.label];
  return j;
}

int cmd_predict(const RunConfig& config, const std::string& text, const std::string& input) {
  require(text.empty() != input.empty(), ErrorKind::InvalidArgument, "predict needs exactly one of --text or --input");
  const ModelDir m = load_model_dir(require_path(config.model, "--model"));
  StorePair stores;
  if (config.inference.use_text_knn || config.inference.use_pro_knn) {
    const fs::path dir = require_path(config.stores, "--stores");
    stores.text = RepresentationStore::read(dir / "text.dkns");
    stores.prob = RepresentationStore::read(dir / "prob.dkns");
  }
  const std::uint64_t fingerprint = model_fingerprint(m.params);

  std::vector<std::string> inputs;
  if (!text.empty()) {
    inputs.push_back(text);
  } else {
    std::istringstream in(read_file(input));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) inputs.push_back(line);
    }
  }
  std::string output;
  for (const auto& t : inputs) {
    const auto p = predict(m.featurizer.transform_sparse(t), m.params, fingerprint, stores, config.inference);
    output += breakdown_json(p, m.labels).dump() + "\n";
  }
  std::cout << output;
  if (!config.out.empty()) {
    ensure_dir(config.out);
    write_text(fs::path(config.out) / "predictions.jsonl", output);
  }
  return 0;
}

ExperimentConfig experiment_config(const RunConfig& config) {
  ExperimentConfig ec;
  ec.data = load_data(require_path(config.data, "--data"));
  ec.features = config.features;
  ec.train = config.train_config();
  ec.inference = config.inference;
  ec.repeats = config.repeats;
  ec.train_ratio = config.train_ratio;
  ec.seed = config.seed;
  ec.noise_ratio = config.noise_ratio;
  ec.noise_test = config.noise_test;
  ec.threads = config.threads;
  return ec;
}

int write_report(const RunConfig& config, const ExperimentReport& report) {
  const fs::path out = config.out;
  ensure_dir(out);
  write_text(out / "report.json", report.to_json());
  write_text(out / "report.txt", report.to_table());
  write_text(out / "config.txt", config.to_text());
  std::cout << report.to_table();
  return 0;
}

int cmd_export_store(const std::string& store_path, const std::string& out) {
  const std::string tsv = export_tsv(RepresentationStore::read(require_path(store_path, "--store")));
  if (out.empty()) std::cout << tsv;
  else write_text(out, tsv);
  return 0;
}

int cmd_gen_synth(const RunConfig& config) {
  const fs::path out = require_path(config.out, "--out");
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_text(out, to_jsonl(generate_synthetic(config.synth_config())));
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Inconsistent:
      return kExitInconsistent;
    case ErrorKind::Corrupt:
      return kExitCorrupt;
    default:
      return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented text classifier with label distribution learning"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* train_cmd = app.add_subcommand("train", "train a model and write its checkpoint");
  Bindings train_b(train_cmd);
  train_b.key("--data", "data", "training dataset").key("--dev", "dev", "dev dataset").key("--out", "out", "output directory");
  add_training_flags(train_b);

  auto* store_cmd = app.add_subcommand("build-store", "build both representation stores from training data");
  Bindings store_b(store_cmd);
  store_b.key("--model", "model", "directory written by train")
      .key("--data", "data", "training dataset")
      .key("--out", "out", "output directory");

  auto* predict_cmd = app.add_subcommand("predict", "print the prediction breakdown as JSON lines");
  Bindings predict_b(predict_cmd);
  predict_b.key("--model", "model", "directory written by train")
      .key("--stores", "stores", "directory written by build-store")
      .key("--out", "out", "also write predictions.jsonl here");
  add_inference_flags(predict_b);
  std::string predict_text;
  std::string predict_input;
  predict_cmd->add_option("--text", predict_text, "single input text");
  predict_cmd->add_option("--input", predict_input, "file with one text per line");

  auto* experiment_cmd = app.add_subcommand("experiment", "model vs retrieval-augmented accuracy over repeats");
  Bindings experiment_b(experiment_cmd);
  add_experiment_flags(experiment_b);

  auto* ablate_cmd = app.add_subcommand("ablate", "eight-row ablation table");
  Bindings ablate_b(ablate_cmd);
  add_experiment_flags(ablate_b);

  auto* sweep_cmd = app.add_subcommand("sweep", "one row per parameter value");
  Bindings sweep_b(sweep_cmd);
  add_experiment_flags(sweep_b);
  std::string sweep_param;
  std::string sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "k|lambda|noise_ratio")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();

  auto* noise_cmd = app.add_subcommand("noise", "retrieval gain under training label noise");
  Bindings noise_b(noise_cmd);
  add_experiment_flags(noise_b);
  std::string noise_ratios = "0,0.03,0.06,0.3,0.5";
  noise_cmd->add_option("--ratios", noise_ratios, "comma-separated noise ratios");

  auto* export_cmd = app.add_subcommand("export-store", "dump a store as TSV");
  std::string export_store;
  std::string export_out;
  export_cmd->add_option("--store", export_store, "store file")->required();
  export_cmd->add_option("--out", export_out, "output file (default stdout)");

  auto* synth_cmd = app.add_subcommand("gen-synth", "write the seeded synthetic corpus as JSONL");
  Bindings synth_b(synth_cmd);
  synth_b.key("--out", "out", "output file")
      .key("--examples", "synth_examples", "number of examples")
      .key("--labels", "synth_labels", "fine labels")
      .key("--groups", "synth_groups", "coarse groups");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_b.resolve());
    if (*store_cmd) return cmd_build_store(store_b.resolve());
    if (*predict_cmd) return cmd_predict(predict_b.resolve(), predict_text, predict_input);
    if (*experiment_cmd) {
      const RunConfig config = experiment_b.resolve();
      require_path(config.out, "--out");
      return write_report(config, run_experiment(experiment_config(config)));
    }
    if (*ablate_cmd) {
      const RunConfig config = ablate_b.resolve();
      require_path(config.out, "--out");
      return write_report(config, ablation_suite(experiment_config(config)));
    }
    if (*sweep_cmd) {
      const RunConfig config = sweep_b.resolve();
      require_path(config.out, "--out");
      SweepParam param;
      if (sweep_param == "k") param = SweepParam::K;
      else if (sweep_param == "lambda") param = SweepParam::Lambda;
      else if (sweep_param == "noise_ratio") param = SweepParam::NoiseRatio;
      else fail(ErrorKind::InvalidArgument, "--param must be k, lambda or noise_ratio");
      const auto values = parse_list(sweep_values, "--values");
      return write_report(config, sweep(experiment_config(config), param, values));
    }
    if (*noise_cmd) {
      const RunConfig config = noise_b.resolve();
      require_path(config.out, "--out");
      const auto ratios = parse_list(noise_ratios, "--ratios");
      return write_report(config, sweep(experiment_config(config), SweepParam::NoiseRatio, ratios));
    }
    if (*export_cmd) return cmd_export_store(export_store, export_out);
    if (*synth_cmd) return cmd_gen_synth(synth_b.resolve());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
