#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace zeus {

// Deterministic random source. The engine is std::mt19937_64, whose output
// stream is fixed by the standard; every distribution transform is
// implemented here so results do not depend on the standard library build.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], rejection sampled to avoid modulo bias.
  int64_t uniform_int(int64_t lo, int64_t hi);

  // Standard normal via Box-Muller, caching the second variate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape);

  // Symmetric Dirichlet(alpha) over k categories.
  std::vector<double> dirichlet(double alpha, int k);

  // Index sampled from a probability vector (assumed normalized).
  int categorical(const std::vector<double>& probs);

  // k distinct indices drawn from [0, n).
  std::vector<int> sample_without_replacement(int n, int k);

  void shuffle(std::vector<int>& v);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless child-seed derivation (splitmix64 finalizer). Each dataset,
// restart or worker gets its own independent stream from (seed, index).
uint64_t mix_seed(uint64_t seed, uint64_t index);

}  // namespace zeus
