#pragma once

// Scalar special functions and random-number plumbing.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace polyfa {

inline constexpr double kProbFloor = 1e-300;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Standard normal CDF via erfc; accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

inline double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * variance) - 0.5 * d * d / variance;
}

/// log density of the inverse gamma with shape a and scale b.
inline double log_inverse_gamma_pdf(double x, double a, double b) {
  if (!(x > 0.0)) return -INFINITY;
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// log(sum exp(x)), stable for large magnitudes.
double log_sum_exp(std::span<const double> x);

/// P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.
double bivariate_normal_cdf(double h, double k, double rho);

/// Probability of the rectangle (a1, b1] x (a2, b2] under the standard
/// bivariate normal; bounds may be infinite.
double bivariate_normal_rectangle(double a1, double b1, double a2, double b2,
                                  double rho);

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` derived from `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    double u = 0.0;
    while (u == 0.0) u = uniform_(engine_);
    return u;
  }
  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace polyfa
