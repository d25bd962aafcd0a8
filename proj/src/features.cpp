#include "dknn/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "dknn/error.hpp"

namespace dknn {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

namespace {

// Byte length of the Unicode whitespace code point starting at text[i], or 0.
std::size_t whitespace_length(std::string_view text, std::size_t i) {
  const auto byte = [&](std::size_t k) -> unsigned {
    return i + k < text.size() ? static_cast<unsigned char>(text[i + k]) : 0u;
  };
  const unsigned b0 = byte(0);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0d)) return 1;
  if (b0 == 0xc2 && (byte(1) == 0x85 || byte(1) == 0xa0)) return 2;  // NEL, NBSP
  if (b0 == 0xe1 && byte(1) == 0x9a && byte(2) == 0x80) return 3;    // U+1680
  if (b0 == 0xe2 && byte(1) == 0x80) {
    const unsigned b2 = byte(2);
    if ((b2 >= 0x80 && b2 <= 0x8a) || b2 == 0xa8 || b2 == 0xa9 || b2 == 0xaf) return 3;  // U+2000..200A, 2028, 2029, 202F
  }
  if (b0 == 0xe2 && byte(1) == 0x81 && byte(2) == 0x9f) return 3;  // U+205F
  if (b0 == 0xe3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_ascii_punct(char ch) {
  const auto u = static_cast<unsigned char>(ch);
  return u < 0x80 && std::ispunct(u);
}

void emit_token(std::string_view piece, bool lowercase, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = piece.size();
  while (begin < end && is_ascii_punct(piece[begin])) ++begin;
  while (end > begin && is_ascii_punct(piece[end - 1])) --end;
  if (begin == end) return;
  std::string token(piece.substr(begin, end - begin));
  if (lowercase)
    for (char& ch : token)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  out.push_back(std::move(token));
}

void normalize(SparseVector& v) {
  double sq = 0.0;
  for (double x : v.values) sq += x * x;
  if (sq == 0.0) return;
  const double norm = std::sqrt(sq);
  for (double& x : v.values) x /= norm;
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (const std::size_t ws = whitespace_length(text, i)) {
      if (i > start) emit_token(text.substr(start, i - start), lowercase, tokens);
      i += ws;
      start = i;
    } else {
      ++i;
    }
  }
  if (start < text.size()) emit_token(text.substr(start), lowercase, tokens);
  return tokens;
}

Vector SparseVector::to_dense() const {
  Vector dense(dim, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) dense[indices[i]] = values[i];
  return dense;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  SparseVector v;
  v.dim = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      v.indices.push_back(static_cast<std::uint32_t>(i));
      v.values.push_back(dense[i]);
    }
  }
  return v;
}

Featurizer Featurizer::fit(std::span<const std::string> corpus, const FeaturizerConfig& config) {
  Featurizer f;
  f.config_ = config;
  if (config.mode == FeatureMode::Hashing) {
    require(config.dim > 0, ErrorKind::InvalidArgument, "featurizer dim must be positive");
    return f;
  }
  require(!corpus.empty(), ErrorKind::InvalidArgument, "tfidf featurizer needs a non-empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& text : corpus) {
    auto tokens = tokenize(text, config.lowercase);
    std::set<std::string> seen(tokens.begin(), tokens.end());
    for (const auto& t : seen) ++df[t];
  }
  require(!df.empty(), ErrorKind::InvalidArgument, "tfidf corpus contains no tokens");
  const double n = static_cast<double>(corpus.size());
  std::uint32_t index = 0;
  for (const auto& [token, count] : df) {
    f.vocab_.emplace(token, index++);
    f.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return f;
}

std::size_t Featurizer::dim() const {
  return config_.mode == FeatureMode::Hashing ? config_.dim : vocab_.size();
}

SparseVector Featurizer::transform_sparse(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& token : tokenize(text, config_.lowercase)) {
    if (config_.mode == FeatureMode::Hashing) {
      counts[static_cast<std::uint32_t>(fnv1a64(token) % config_.dim)] += 1.0;
    } else if (auto it = vocab_.find(token); it != vocab_.end()) {
      counts[it->second] += 1.0;
    }
  }
  SparseVector v;
  v.dim = dim();
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [idx, count] : counts) {
    v.indices.push_back(idx);
    v.values.push_back(config_.mode == FeatureMode::Tfidf ? count * idf_[idx] : count);
  }
  normalize(v);
  return v;
}

void Featurizer::save(std::ostream& out) const {
  out << "dknn-featurizer 1\n";
  out << "mode " << (config_.mode == FeatureMode::Hashing ? "hashing" : "tfidf") << '\n';
  out << "dim " << config_.dim << '\n';
  out << "lowercase " << (config_.lowercase ? 1 : 0) << '\n';
  out << "vocab " << vocab_.size() << '\n';
  for (const auto& [token, idx] : vocab_) out << token << '\t' << format_double(idf_[idx]) << '\n';
}

Featurizer Featurizer::load(std::istream& in) {
  const auto corrupt = [](const std::string& why) { fail(ErrorKind::Corrupt, "featurizer file: " + why); };
  std::string line;
  std::string key;
  if (!std::getline(in, line) || line != "dknn-featurizer 1") corrupt("bad header");
  Featurizer f;
  std::size_t vocab_size = 0;
  for (const char* expected : {"mode", "dim", "lowercase", "vocab"}) {
    if (!std::getline(in, line)) corrupt("truncated");
    std::istringstream fields(line);
    std::string value;
    fields >> key >> value;
    if (key != expected) corrupt(std::string("expected '") + expected + "'");
    if (key == "mode") {
      if (value == "hashing") f.config_.mode = FeatureMode::Hashing;
      else if (value == "tfidf") f.config_.mode = FeatureMode::Tfidf;
      else corrupt("unknown mode " + value);
    } else if (key == "dim") {
      f.config_.dim = std::stoul(value);
    } else if (key == "lowercase") {
      f.config_.lowercase = value == "1";
    } else {
      vocab_size = std::stoul(value);
    }
  }
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (!std::getline(in, line)) corrupt("truncated vocabulary");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) corrupt("malformed vocabulary line");
    double idf = 0.0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    if (std::from_chars(first, last, idf).ec != std::errc{}) corrupt("bad idf value");
    f.vocab_.emplace(line.substr(0, tab), static_cast<std::uint32_t>(i));
    f.idf_.push_back(idf);
  }
  require(f.dim() > 0, ErrorKind::Corrupt, "featurizer file: zero dimension");
  return f;
}

}  // namespace dknn
