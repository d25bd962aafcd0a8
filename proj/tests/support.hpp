#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "dknn/rng.hpp"

namespace test {

inline std::vector<double> random_vector(dknn::Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = (rng.uniform() * 2.0 - 1.0) * scale;
  return v;
}

// Mix of dense, sparse, and peaked distributions.
inline std::vector<double> random_distribution(dknn::Rng& rng, std::size_t c) {
  std::vector<double> p(c);
  const auto style = rng.below(4);
  double sum = 0.0;
  for (double& x : p) {
    x = rng.uniform();
    if (style == 1 && rng.uniform() < 0.5) x = 0.0;
    if (style == 2) x = std::pow(x, 8.0);
    sum += x;
  }
  if (sum == 0.0) {
    p[rng.below(c)] = 1.0;
    return p;
  }
  if (style == 3) {
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.below(c)] = 1.0;
    return p;
  }
  for (double& x : p) x /= sum;
  return p;
}

// Fresh directory under the system temp dir, removed when the object dies.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / ("dknn_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace test
