#pragma once

#include <cstdint>
#include <random>

#include "saddle/types.hpp"

namespace saddle {

/// Deterministic random source. Every sampler is built directly on the raw
/// 64-bit engine output rather than on std:: distributions, whose exact
/// output sequences are implementation-defined; this keeps seeded results
/// identical across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1}, rejection sampled to avoid modulo bias.
  int uniform_int(int n);

  /// Standard exponential via inverse CDF.
  double exponential() { return -std::log1p(-uniform()); }

  /// Standard normal via Box-Muller.
  double gaussian();

  /// Uniform sample from the probability simplex in R^m (normalized
  /// exponentials, the flat Dirichlet).
  Vec simplex(int m);

  /// Index sample from an explicit finite distribution (inverse CDF walk).
  int categorical(const Vec& probs);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Uniform sample from the solid L2 ball of the given radius in R^d.
Vec random_ball(Rng& rng, int d, double radius);

/// Gaussian direction scaled to exactly the given norm.
Vec random_sphere(Rng& rng, int d, double radius);

}  // namespace saddle
