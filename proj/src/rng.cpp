#include "zeus/rng.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "zeus/common.hpp"

namespace zeus {

int64_t Rng::uniform_int(int64_t lo, int64_t hi) {
  if (lo > hi) throw UsageError("uniform_int: empty range");
  uint64_t range = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  if (range == 0) return static_cast<int64_t>(next_u64());
  // Accept x < 2^64 - (2^64 mod range), i.e. the largest multiple of range.
  uint64_t rem = (UINT64_MAX % range + 1) % range;
  uint64_t x;
  do {
    x = next_u64();
  } while (rem != 0 && x >= uint64_t(0) - rem);
  return lo + static_cast<int64_t>(x % range);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) throw UsageError("gamma: shape must be positive");
  if (shape < 1.0) {
    double u = 1.0 - uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = 1.0 - uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

std::vector<double> Rng::dirichlet(double alpha, int k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    w[i] = gamma(alpha);
    total += w[i];
  }
  if (total <= 0.0) {  // astronomically unlikely; fall back to uniform
    for (int i = 0; i < k; ++i) w[i] = 1.0 / k;
    return w;
  }
  for (int i = 0; i < k; ++i) w[i] /= total;
  return w;
}

int Rng::categorical(const std::vector<double>& probs) {
  double u = uniform();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (k > n) throw UsageError("sample_without_replacement: k > n");
  // Partial Fisher-Yates over an index vector.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = static_cast<int>(uniform_int(i, n - 1));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

void Rng::shuffle(std::vector<int>& v) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(uniform_int(0, i));
    std::swap(v[i], v[j]);
  }
}

uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int worker_count() {
  if (const char* env = std::getenv("ZEUS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace zeus
