#pragma once

// Ordered-category factor model: y*_ij = beta_j' f_i + e_ij with normal
// (probit) or logistic (logit) errors, categorized by fixed cutoffs.

#include <span>
#include <vector>

#include "polyfa/core.hpp"

namespace polyfa {

/// gamma = F((alpha - eta) / sigma); 0 at alpha = -inf and 1 at alpha = +inf.
double cumulative_prob(LinkKind link, double alpha, double eta, double sigma);

/// Category probabilities pi_1..pi_K for one cell. `cutoffs` holds the K - 1
/// interior cutoffs.
std::vector<double> category_probs(LinkKind link, std::span<const double> cutoffs,
                                   double eta, double sigma, int categories);

/// log pi for a single cell with bin (lower, upper], floored at 1e-300.
double cell_log_prob(LinkKind link, double lower, double upper, double eta,
                     double sigma);

/// Sum over cells of log pi_{i,j,y_ij}.
double log_likelihood(const CategoricalDataset& data, const ParameterState& state,
                      const ModelSpec& spec);

/// Per-unit log-likelihood sum_j log pi_{i,j,y_ij}.
std::vector<double> pointwise_log_likelihood(const CategoricalDataset& data,
                                             const ParameterState& state,
                                             const ModelSpec& spec);

/// Factor-integrated cumulative probability under the probit model:
/// Phi(alpha / sqrt(|beta_row|^2 + sigma^2)).
double marginal_cumulative_probit(double alpha, std::span<const double> beta_row,
                                  double sigma);

/// Factor-integrated cumulative probability for either link, by adaptive
/// quadrature over the scalar projection beta_row' f ~ N(0, |beta_row|^2).
double marginal_cumulative(LinkKind link, double alpha, std::span<const double> beta_row,
                           double sigma);

/// beta beta' + Sigma.
Matrix latent_covariance(const ParameterState& state);

/// In-place lower Cholesky factor; false if the matrix is not positive definite.
bool cholesky_in_place(Matrix& a);

/// Checks that `state` has the shape implied by `data` and `spec`.
void check_dimensions(const CategoricalDataset& data, const ParameterState& state,
                      const ModelSpec& spec);

}  // namespace polyfa
