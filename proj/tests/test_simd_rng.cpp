#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "dknn/rng.hpp"
#include "dknn/simd.hpp"
#include "support.hpp"

using namespace dknn;

namespace {

// Reference order: four lane sums, (s0 + s1) + (s2 + s3), then the tail.
double lane_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s[4] = {0, 0, 0, 0};
  const std::size_t body = a.size() / 4 * 4;
  for (std::size_t i = 0; i < body; ++i) s[i % 4] += a[i] * b[i];
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (std::size_t i = body; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

std::vector<const simd::Kernels*> variants() {
  std::vector<const simd::Kernels*> out{&simd::scalar_kernels()};
  if (auto* k = simd::avx2_kernels()) out.push_back(k);
  if (auto* k = simd::neon_kernels()) out.push_back(k);
  return out;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar kernels follow the lane order") {
  Rng rng(1);
  const auto& k = simd::scalar_kernels();
  for (std::size_t n = 0; n < 40; ++n) {
    const auto a = test::random_vector(rng, n, 3.0);
    const auto b = test::random_vector(rng, n, 3.0);
    CHECK(same_bits(k.dot(a.data(), b.data(), n), lane_dot(a, b)));
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
    CHECK(same_bits(k.squared_l2(a.data(), b.data(), n), lane_dot(diff, diff)));
  }
}

TEST_CASE("every variant is bit-identical to scalar") {
  const auto& ref = simd::scalar_kernels();
  Rng rng(2);
  for (const auto* k : variants()) {
    INFO(k->name);
    for (int t = 0; t < 300; ++t) {
      const std::size_t n = rng.below(70);
      const auto a = test::random_vector(rng, n, 10.0);
      const auto b = test::random_vector(rng, n, 10.0);
      std::vector<float> key(n);
      for (std::size_t i = 0; i < n; ++i) key[i] = static_cast<float>(a[i]);
      CHECK(same_bits(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n)));
      CHECK(same_bits(k->squared_l2(a.data(), b.data(), n), ref.squared_l2(a.data(), b.data(), n)));
      CHECK(same_bits(k->squared_l2_f32(key.data(), b.data(), n), ref.squared_l2_f32(key.data(), b.data(), n)));

      std::vector<double> y1 = b;
      std::vector<double> y2 = b;
      const double alpha = rng.uniform() * 4.0 - 2.0;
      k->axpy(alpha, a.data(), y1.data(), n);
      ref.axpy(alpha, a.data(), y2.data(), n);
      CHECK(y1 == y2);

      const simd::AdamCoefficients c{0.9, 0.999, 0.1, 0.001, 1.0 - std::pow(0.9, 3.0), 1.0 - std::pow(0.999, 3.0), 1e-3, 1e-8};
      std::vector<double> p1 = a, p2 = a;
      std::vector<double> m1 = test::random_vector(rng, n, 0.1), m2 = m1;
      std::vector<double> v1(n), v2;
      for (double& v : v1) v = rng.uniform() * 0.01;
      v2 = v1;
      k->adam_update(p1.data(), b.data(), m1.data(), v1.data(), n, c);
      ref.adam_update(p2.data(), b.data(), m2.data(), v2.data(), n, c);
      CHECK(p1 == p2);
      CHECK(m1 == m2);
      CHECK(v1 == v2);
    }
  }
}

TEST_CASE("active kernel is one of the variants") {
  const auto& active = simd::active();
  bool found = false;
  for (const auto* k : variants()) found |= (k == &active);
  CHECK(found);
}

}  // TEST_SUITE

TEST_SUITE("rng") {

TEST_CASE("splitmix64 reference value") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(state == 0x9e3779b97f4a7c15ULL);
}

TEST_CASE("xoshiro256** first output from splitmix-seeded state") {
  std::uint64_t state = 42;
  std::uint64_t s[4];
  for (auto& w : s) w = splitmix64(state);
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  Rng rng(42);
  CHECK(rng.next() == rotl(s[1] * 5, 7) * 9);
}

TEST_CASE("streams are reproducible and seed-sensitive") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs |= (x != c.next());
  }
  CHECK(differs);
}

TEST_CASE("uniform, below and normal ranges") {
  Rng rng(9);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.below(7) < 7);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  CHECK(rng.below(0) == 0);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  Rng r1(3), r2(3);
  r1.shuffle(std::span<int>(v));
  r2.shuffle(std::span<int>(w));
  CHECK(v == w);
  std::sort(w.begin(), w.end());
  for (int i = 0; i < 50; ++i) CHECK(w[i] == i);
}

TEST_CASE("derive_seed mixes seed and tag") {
  CHECK(derive_seed(1, 2) == derive_seed(3, 0));  // both hash 1 ^ 2 == 3 ^ 0
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

}  // TEST_SUITE
