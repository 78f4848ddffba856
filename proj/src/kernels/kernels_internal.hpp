#pragma once

#include <algorithm>
#include <cmath>

#include "polyfa/kernels.hpp"
#include "polyfa/numeric.hpp"

namespace polyfa::kernels {

extern const KernelTable kScalarTable;
#if defined(POLYFA_HAVE_AVX2_TU)
extern const KernelTable kAvx2Table;
#endif

namespace detail {

/// Reflects a bin (lo, hi] in standardized units into the lower half so the
/// difference of CDFs is taken where it does not cancel.
inline void reflect(double& lo, double& hi) {
  if (lo > 0.0) {
    const double t = lo;
    lo = -hi;
    hi = -t;
  }
}

/// Scalar reference for one ordinal cell.
inline double ordinal_cell(LinkKind link, double lower, double upper, double eta,
                           double inv_sigma) {
  double lo = (lower - eta) * inv_sigma;
  double hi = (upper - eta) * inv_sigma;
  reflect(lo, hi);
  double prob;
  if (link == LinkKind::probit) {
    prob = 0.5 * (std::erfc(-hi * kInvSqrt2) - std::erfc(-lo * kInvSqrt2));
  } else {
    prob = 1.0 / (1.0 + std::exp(-hi)) - 1.0 / (1.0 + std::exp(-lo));
  }
  return std::log(std::max(prob, kProbFloor));
}

/// Scalar reference for one nominal cell; scores has row stride `stride`.
inline double nominal_cell(const double* scores, std::size_t stride, std::size_t m, int y,
                           std::size_t i) {
  double top = 0.0;
  for (std::size_t k = 0; k < m; ++k) top = std::max(top, scores[k * stride + i]);
  double s = std::exp(-top);
  for (std::size_t k = 0; k < m; ++k) s += std::exp(scores[k * stride + i] - top);
  const double picked = y == 1 ? 0.0 : scores[static_cast<std::size_t>(y - 2) * stride + i];
  return picked - top - std::log(s);
}

}  // namespace detail
}  // namespace polyfa::kernels
