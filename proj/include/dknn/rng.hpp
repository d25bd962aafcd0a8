#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace dknn {

/// splitmix64 step; used to expand a 64-bit seed into generator state and to
/// derive sub-seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Sub-seed for a named purpose: splitmix64 of (seed xor tag).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// xoshiro256** 1.0 (Blackman & Vigna), state filled by four splitmix64 draws
/// from the seed. Every random decision in the library goes through this
/// generator so runs are reproducible from a single seed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next();

  /// Uniform in [0, 1) with 53 random bits: (next() >> 11) * 2^-53.
  double uniform();

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal by the Box-Muller transform; draws come in pairs and the
  /// second value is cached for the next call.
  double normal();

  /// Fisher-Yates from the back: for i = n-1 down to 1 swap(i, below(i+1)).
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace dknn
