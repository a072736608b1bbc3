#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace featalloc {

/// Seeded random stream owned by a single chain. Identical seeds give
/// identical draw sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  /// Shape/rate parametrisation.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
  }
  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }
  unsigned poisson(double rate) {
    if (rate <= 0.0) return 0;
    return std::poisson_distribution<unsigned>(rate)(engine_);
  }
  unsigned binomial(unsigned trials, double p) {
    return std::binomial_distribution<unsigned>(trials, p)(engine_);
  }
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  /// Index drawn proportionally to normalised probabilities.
  std::size_t categorical(std::span<const double> probs);

  /// Uniformly random permutation of {0, .., n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser; used to derive independent per-chain seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t counter);

}  // namespace featalloc
