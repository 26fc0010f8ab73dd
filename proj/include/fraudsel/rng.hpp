#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fraudsel {

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

// Seed for sub-stream `stream` of `master`. Distinct (master, stream) pairs
// give statistically independent engines.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded random source. The engine is std::mt19937_64 (sequence fixed by the
// standard) and all variates come from Boost.Random, whose algorithms do not
// vary between standard libraries, so streams are reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double low, double high);
  double normal();
  double chi_squared(double df);
  // Beta(a, b) on (0, 1).
  double beta(double a, double b);
  double exponential(double rate);
  bool bernoulli(double p);
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fraudsel
