#pragma once

// Pre-fit tools: cutoffs from marginal proportions and polychoric
// correlations for eliciting the number of factors.

#include <iosfwd>
#include <span>
#include <vector>

#include "polyfa/core.hpp"

namespace polyfa {

/// alpha_{j,k} = Phi^{-1}(sum_{m <= k} n_{jm} / n), k = 1..K_j - 1.
CutoffSet estimate_cutoffs(const CategoricalDataset& data);

/// Interior cutoffs of one column of 1-based categories.
std::vector<double> column_cutoffs(std::span<const int> column, int categories);

/// Two-step polychoric correlation: cutoffs from each margin, then rho
/// maximizing the contingency-table likelihood on (-0.999, 0.999).
double polychoric_pair(std::span<const int> a, int categories_a, std::span<const int> b,
                       int categories_b);

/// Symmetric p x p matrix with unit diagonal.
Matrix polychoric_matrix(const CategoricalDataset& data);

void write_polychoric_csv(std::ostream& out, const Matrix& rho,
                          const std::vector<std::string>& names);
/// Long format: row,column,rho with one line per ordered pair.
void write_polychoric_long_csv(std::ostream& out, const Matrix& rho,
                               const std::vector<std::string>& names);

}  // namespace polyfa
