#pragma once

// Domain types shared by every model: datasets of category indices, cutoff
// sets, parameter states, priors and model specifications.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyfa {

/// Raised for malformed input data or configuration.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when array shapes disagree.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class LinkKind { probit, logit };

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class ModelKind { ordinal_probit, ordinal_logit, nominal };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);
bool is_ordinal(ModelKind kind);
LinkKind link_of(ModelKind kind);

/// n x p matrix of observed categories. Values are 1-based category indices,
/// stored column-major so that one variable's column is contiguous.
class CategoricalDataset {
public:
  CategoricalDataset() = default;

  /// `values` is row-major (unit i, variable j at i * p + j). Validates every
  /// cell against `categories` and, when n > 0, that every category of every
  /// variable is observed.
  CategoricalDataset(std::size_t n, std::size_t p, std::vector<int> categories,
                     std::span<const int> values,
                     std::vector<std::string> names = {});

  /// Dataset with no sample units; used for prior-only runs.
  static CategoricalDataset empty(std::size_t p, std::vector<int> categories);

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  int categories(std::size_t j) const { return categories_[j]; }
  const std::vector<int>& categories() const { return categories_; }
  std::optional<int> uniform_categories() const;
  int value(std::size_t i, std::size_t j) const { return values_[j * n_ + i]; }
  std::span<const int> column(std::size_t j) const {
    return {values_.data() + j * n_, n_};
  }
  const std::vector<std::string>& names() const { return names_; }
  std::string variable_name(std::size_t j) const;

  /// Counts n_{jk} for k = 1..K_j (index k - 1).
  std::vector<std::size_t> category_counts(std::size_t j) const;

  friend bool operator==(const CategoricalDataset&,
                         const CategoricalDataset&) = default;

private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<int> categories_;
  std::vector<int> values_;
  std::vector<std::string> names_;
};

/// Parses a comma-delimited integer table. Optional `#K=<int>` (or
/// `#K=<k1>,<k2>,...`) directive, optional header row of variable names.
CategoricalDataset load_dataset(std::istream& in);
CategoricalDataset load_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const CategoricalDataset& data);

/// Fixed bin boundaries alpha_{j,1} < ... < alpha_{j,K_j - 1}; alpha_{j,0} and
/// alpha_{j,K_j} are the infinite sentinels.
class CutoffSet {
public:
  CutoffSet() = default;
  explicit CutoffSet(std::vector<std::vector<double>> cutoffs);

  std::size_t p() const { return cutoffs_.size(); }
  int categories(std::size_t j) const {
    return static_cast<int>(cutoffs_[j].size()) + 1;
  }
  /// alpha_{j,k} for k in 0..K_j, sentinels included.
  double alpha(std::size_t j, int k) const;
  const std::vector<double>& interior(std::size_t j) const { return cutoffs_[j]; }

  friend bool operator==(const CutoffSet&, const CutoffSet&) = default;

private:
  std::vector<std::vector<double>> cutoffs_;
};

CutoffSet load_cutoffs(std::istream& in);
CutoffSet load_cutoffs_file(const std::string& path);
void write_cutoffs(std::ostream& out, const CutoffSet& cutoffs,
                   const std::vector<std::string>& names = {});

struct PriorConfig {
  double c0 = 100.0;  // loading prior variance
  double nu = 0.02;   // inverse-gamma degrees of freedom
  double s2 = 1.0;    // inverse-gamma scale

  void validate() const;
  double ig_shape() const { return nu / 2.0; }
  double ig_scale() const { return nu * s2 / 2.0; }
};

struct ModelSpec {
  ModelKind kind = ModelKind::ordinal_probit;
  std::size_t q = 1;
  std::optional<CutoffSet> cutoffs;
  PriorConfig prior;
  /// Nominal only: tie beta^(2) = ... = beta^(K).
  bool shared_loadings = false;

  /// Structural checks that do not depend on a dataset.
  void validate() const;
  /// Checks against a dataset, including the identifiability bound on q.
  void validate_for(const CategoricalDataset& data) const;
};

/// One point in the posterior space.
///
/// Loadings are stored per set (one set for ordinal models, K - 1 sets for
/// nominal ones, category 2 first), each p x q row-major. Factors are q x n,
/// factor-major, so f(l, .) is contiguous over units.
struct ParameterState {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t n = 0;
  std::size_t loading_sets = 1;
  std::vector<double> loadings;
  std::vector<double> variances;
  std::vector<double> factors;

  static ParameterState zeros(std::size_t p, std::size_t q, std::size_t n,
                              std::size_t loading_sets, bool with_variances);

  double& beta(std::size_t j, std::size_t l, std::size_t set = 0) {
    return loadings[(set * p + j) * q + l];
  }
  double beta(std::size_t j, std::size_t l, std::size_t set = 0) const {
    return loadings[(set * p + j) * q + l];
  }
  std::span<double> beta_row(std::size_t j, std::size_t set = 0) {
    return {loadings.data() + (set * p + j) * q, q};
  }
  std::span<const double> beta_row(std::size_t j, std::size_t set = 0) const {
    return {loadings.data() + (set * p + j) * q, q};
  }
  double& factor(std::size_t l, std::size_t i) { return factors[l * n + i]; }
  double factor(std::size_t l, std::size_t i) const { return factors[l * n + i]; }

  /// True when loadings are block lower triangular with positive diagonal and
  /// all variances are positive.
  bool satisfies_constraints() const;
  /// Throws DimensionError on inconsistent sizes.
  void check_shape() const;
};

/// Number of free loadings in a block lower triangular p x q matrix.
std::size_t free_loadings(std::size_t p, std::size_t q);

/// p(q + 1) - q(q - 1)/2: free loadings plus p idiosyncratic variances.
std::size_t count_free_parameters(std::size_t p, std::size_t q);

/// Largest q with p(p + 1)/2 - p(q + 1) + q(q - 1)/2 >= 0 (0 if none).
std::size_t max_factors(std::size_t p);

}  // namespace polyfa
