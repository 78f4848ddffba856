#include <algorithm>
#include <cmath>

#include "kernels_internal.hpp"

namespace polyfa::kernels {
namespace {

void linear_predictor_scalar(const double* beta, std::size_t q, const double* factors,
                             std::size_t n, double* eta) {
  std::fill(eta, eta + n, 0.0);
  for (std::size_t l = 0; l < q; ++l) {
    const double b = beta[l];
    const double* f = factors + l * n;
    for (std::size_t i = 0; i < n; ++i) eta[i] += b * f[i];
  }
}

void ordinal_logprob_scalar(LinkKind link, const double* lower, const double* upper,
                            const double* eta, double inv_sigma, std::size_t n,
                            double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = detail::ordinal_cell(link, lower[i], upper[i], eta[i], inv_sigma);
}

void nominal_logprob_scalar(const double* scores, std::size_t categories, const int* y,
                            std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = detail::nominal_cell(scores, n, categories - 1, y[i], i);
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const KernelTable kScalarTable{
    linear_predictor_scalar,
    ordinal_logprob_scalar,
    nominal_logprob_scalar,
    sum_scalar,
};

}  // namespace polyfa::kernels
