#pragma once

// Non-ordered categorical factor model. Category 1 is the reference:
// log(pi_k / pi_1) = sum_l beta^{(k)}_{jl} f_l for k = 2..K.

#include <span>
#include <vector>

#include "polyfa/core.hpp"

namespace polyfa {

/// `loadings_by_category` is (K - 1) x q row-major: row k - 2 holds beta_{j.k}.
std::vector<double> category_probs_nominal(std::span<const double> loadings_by_category,
                                           std::span<const double> factors);

double log_likelihood_nominal(const CategoricalDataset& data,
                              const ParameterState& state, const ModelSpec& spec);

std::vector<double> pointwise_log_likelihood_nominal(const CategoricalDataset& data,
                                                     const ParameterState& state,
                                                     const ModelSpec& spec);

/// Per-unit log-likelihood for whichever model `spec` names.
std::vector<double> pointwise_log_likelihood_any(const CategoricalDataset& data,
                                                 const ParameterState& state,
                                                 const ModelSpec& spec);
double log_likelihood_any(const CategoricalDataset& data, const ParameterState& state,
                          const ModelSpec& spec);

}  // namespace polyfa
