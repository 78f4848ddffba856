#pragma once

// Data-parallel inner loops of the likelihood. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2/FMA variant. The active
// variant is chosen once at startup from CPUID; POLYFA_KERNELS=scalar|avx2 in
// the environment overrides the choice.

#include <cstddef>
#include <span>
#include <string_view>

#include "polyfa/core.hpp"

namespace polyfa::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);
bool supported(Isa isa);
Isa active_isa();

struct KernelTable {
  /// eta[i] = sum_l beta[l] * factors[l * n + i]
  void (*linear_predictor)(const double* beta, std::size_t q, const double* factors,
                           std::size_t n, double* eta);
  /// out[i] = log max(F(z_hi) - F(z_lo), 1e-300) with z = (bound - eta) * inv_sigma
  void (*ordinal_logprob)(LinkKind link, const double* lower, const double* upper,
                          const double* eta, double inv_sigma, std::size_t n,
                          double* out);
  /// scores is (K - 1) x n (category 2 first); out[i] = log pi_{y_i}.
  void (*nominal_logprob)(const double* scores, std::size_t categories, const int* y,
                          std::size_t n, double* out);
  double (*sum)(const double* x, std::size_t n);
};

const KernelTable& table(Isa isa);
const KernelTable& active();

// Span front-ends over the active table.

void linear_predictor(std::span<const double> beta, std::span<const double> factors,
                      std::span<double> eta);
void ordinal_logprob(LinkKind link, std::span<const double> lower,
                     std::span<const double> upper, std::span<const double> eta,
                     double inv_sigma, std::span<double> out);
void nominal_logprob(std::span<const double> scores, std::size_t categories,
                     std::span<const int> y, std::span<double> out);
double sum(std::span<const double> x);

}  // namespace polyfa::kernels
