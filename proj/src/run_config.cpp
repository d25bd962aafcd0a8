#include "dknn/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dknn/error.hpp"

namespace dknn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  fail(ErrorKind::InvalidArgument,
       "invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " + std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) bad_value(key, value, "a number");
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  return parse_number<std::size_t>(key, value);
}

double parse_double(std::string_view key, std::string_view value) {
  return parse_number<double>(key, value);
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "on|off");
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const char* on_off(bool b) { return b ? "on" : "off"; }

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view value = trim(raw);
  if (key == "data") data = value;
  else if (key == "dev") dev = value;
  else if (key == "model") model = value;
  else if (key == "stores") stores = value;
  else if (key == "out") out = value;
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "features") {
    if (value == "hashing") features.mode = FeatureMode::Hashing;
    else if (value == "tfidf") features.mode = FeatureMode::Tfidf;
    else bad_value(key, value, "hashing|tfidf");
  } else if (key == "feature_dim") features.dim = parse_size(key, value);
  else if (key == "lowercase") features.lowercase = parse_bool(key, value);
  else if (key == "batch_size") train.batch_size = parse_size(key, value);
  else if (key == "epochs") train.epochs = parse_size(key, value);
  else if (key == "learning_rate") train.learning_rate = parse_double(key, value);
  else if (key == "embed_dim") train.embed_dim = parse_size(key, value);
  else if (key == "beta1") train.adam.beta1 = parse_double(key, value);
  else if (key == "beta2") train.adam.beta2 = parse_double(key, value);
  else if (key == "adam_eps") train.adam.eps = parse_double(key, value);
  else if (key == "ll") train.ll.enable_kl = train.ll.enable_cl = parse_bool(key, value);
  else if (key == "kl") train.ll.enable_kl = parse_bool(key, value);
  else if (key == "cl") train.ll.enable_cl = parse_bool(key, value);
  else if (key == "rho") train.ll.rho = parse_double(key, value);
  else if (key == "cosine_m") train.ll.cosine_m = parse_bool(key, value);
  else if (key == "kl_weight") train.ll.kl_weight = parse_double(key, value);
  else if (key == "cl_weight") train.ll.cl_weight = parse_double(key, value);
  else if (key == "k") inference.k = parse_size(key, value);
  else if (key == "lambda") inference.lambda = parse_double(key, value);
  else if (key == "text_knn") inference.use_text_knn = parse_bool(key, value);
  else if (key == "pro_knn") inference.use_pro_knn = parse_bool(key, value);
  else if (key == "kl_order") {
    if (value == "key-first") inference.kl_order = KlOrder::KeyFirst;
    else if (value == "query-first") inference.kl_order = KlOrder::QueryFirst;
    else bad_value(key, value, "key-first|query-first");
  } else if (key == "repeats") repeats = parse_size(key, value);
  else if (key == "train_ratio") train_ratio = parse_double(key, value);
  else if (key == "noise_ratio") noise_ratio = parse_double(key, value);
  else if (key == "noise_test") noise_test = parse_bool(key, value);
  else if (key == "threads") threads = parse_size(key, value);
  else if (key == "synth_examples") synth.examples = parse_size(key, value);
  else if (key == "synth_labels") synth.labels = parse_size(key, value);
  else if (key == "synth_groups") synth.groups = parse_size(key, value);
  else fail(ErrorKind::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::load_text(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::InvalidArgument,
           std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    try {
      set(key, line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::InvalidArgument, std::string(origin) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path.string());
}

void RunConfig::validate() const {
  require(features.dim >= 1, ErrorKind::InvalidArgument, "feature_dim must be >= 1");
  train_config().validate();
  inference.validate();
  require(repeats >= 1, ErrorKind::InvalidArgument, "repeats must be >= 1");
  require(train_ratio > 0.0 && train_ratio < 1.0, ErrorKind::InvalidArgument, "train_ratio must lie in (0, 1)");
  require(noise_ratio >= 0.0 && noise_ratio <= 1.0, ErrorKind::InvalidArgument, "noise_ratio must lie in [0, 1]");
  synth_config().validate();
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc = train;
  tc.seed = seed;
  return tc;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig sc = synth;
  sc.seed = seed;
  return sc;
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << "data = " << data << "\n"
    << "dev = " << dev << "\n"
    << "model = " << model << "\n"
    << "stores = " << stores << "\n"
    << "out = " << out << "\n"
    << "seed = " << seed << "\n"
    << "features = " << (features.mode == FeatureMode::Hashing ? "hashing" : "tfidf") << "\n"
    << "feature_dim = " << features.dim << "\n"
    << "lowercase = " << on_off(features.lowercase) << "\n"
    << "batch_size = " << train.batch_size << "\n"
    << "epochs = " << train.epochs << "\n"
    << "learning_rate = " << format_double(train.learning_rate) << "\n"
    << "embed_dim = " << train.embed_dim << "\n"
    << "beta1 = " << format_double(train.adam.beta1) << "\n"
    << "beta2 = " << format_double(train.adam.beta2) << "\n"
    << "adam_eps = " << format_double(train.adam.eps) << "\n"
    << "kl = " << on_off(train.ll.enable_kl) << "\n"
    << "cl = " << on_off(train.ll.enable_cl) << "\n"
    << "rho = " << format_double(train.ll.rho) << "\n"
    << "cosine_m = " << on_off(train.ll.cosine_m) << "\n"
    << "kl_weight = " << format_double(train.ll.kl_weight) << "\n"
    << "cl_weight = " << format_double(train.ll.cl_weight) << "\n"
    << "k = " << inference.k << "\n"
    << "lambda = " << format_double(inference.lambda) << "\n"
    << "text_knn = " << on_off(inference.use_text_knn) << "\n"
    << "pro_knn = " << on_off(inference.use_pro_knn) << "\n"
    << "kl_order = " << (inference.kl_order == KlOrder::KeyFirst ? "key-first" : "query-first") << "\n"
    << "repeats = " << repeats << "\n"
    << "train_ratio = " << format_double(train_ratio) << "\n"
    << "noise_ratio = " << format_double(noise_ratio) << "\n"
    << "noise_test = " << on_off(noise_test) << "\n"
    << "threads = " << threads << "\n"
    << "synth_examples = " << synth.examples << "\n"
    << "synth_labels = " << synth.labels << "\n"
    << "synth_groups = " << synth.groups << "\n";
  return o.str();
}

}  // namespace dknn
