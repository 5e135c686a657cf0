#include "saddle/rng.hpp"

#include <cmath>

#include "saddle/errors.hpp"

namespace saddle {

int Rng::uniform_int(int n) {
  if (n <= 0) throw ArgumentError("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Vec Rng::simplex(int m) {
  if (m <= 0) throw ArgumentError("simplex: dimension must be positive");
  Vec x(m);
  for (int i = 0; i < m; ++i) x[i] = exponential();
  return x / x.sum();
}

int Rng::categorical(const Vec& probs) {
  const int m = static_cast<int>(probs.size());
  if (m == 0) throw ArgumentError("categorical: empty distribution");
  const double u = uniform();
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding can leave acc slightly below 1; fall back to the last index
  // with positive mass.
  for (int i = m - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  throw ArgumentError("categorical: distribution has no mass");
}

Vec random_sphere(Rng& rng, int d, double radius) {
  Vec x(d);
  double norm = 0.0;
  do {
    for (int i = 0; i < d; ++i) x[i] = rng.gaussian();
    norm = x.norm();
  } while (norm == 0.0);
  return x * (radius / norm);
}

Vec random_ball(Rng& rng, int d, double radius) {
  const double u = rng.uniform();
  return random_sphere(rng, d, radius * std::pow(u, 1.0 / d));
}

}  // namespace saddle
