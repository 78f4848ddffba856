#include "polyfa/nominal_model.hpp"

#include <cmath>

#include "polyfa/kernels.hpp"
#include "polyfa/numeric.hpp"
#include "polyfa/ordinal_model.hpp"

namespace polyfa {

std::vector<double> category_probs_nominal(std::span<const double> loadings_by_category,
                                           std::span<const double> factors) {
  const std::size_t q = factors.size();
  if (q == 0 || loadings_by_category.empty() || loadings_by_category.size() % q != 0)
    throw DimensionError("category_probs_nominal: loadings must be (K - 1) x q");
  const std::size_t m = loadings_by_category.size() / q;

  std::vector<double> scores(m + 1, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < q; ++l) s += loadings_by_category[k * q + l] * factors[l];
    scores[k + 1] = s;
  }
  const double lse = log_sum_exp(scores);
  std::vector<double> probs(m + 1);
  for (std::size_t k = 0; k <= m; ++k) probs[k] = std::exp(scores[k] - lse);
  return probs;
}

namespace {

void check_nominal(const CategoricalDataset& data, const ParameterState& state,
                   const ModelSpec& spec) {
  if (spec.kind != ModelKind::nominal)
    throw ValidationError("nominal likelihood: spec is not nominal");
  check_dimensions(data, state, spec);
  const auto k = data.uniform_categories();
  if (!k) throw ValidationError("nominal likelihood: non-uniform K across variables");
  if (state.loading_sets != static_cast<std::size_t>(*k - 1))
    throw DimensionError("nominal likelihood: state must carry K - 1 loading sets");
}

template <typename Fn>
void for_each_column(const CategoricalDataset& data, const ParameterState& state, Fn&& fn) {
  const std::size_t n = data.n();
  const std::size_t m = state.loading_sets;
  const std::size_t categories = m + 1;
  std::vector<double> scores(m * n);
  std::vector<double> cells(n);
  for (std::size_t j = 0; j < data.p(); ++j) {
    for (std::size_t k = 0; k < m; ++k)
      kernels::linear_predictor(state.beta_row(j, k), state.factors,
                                std::span<double>(scores.data() + k * n, n));
    kernels::nominal_logprob(scores, categories, data.column(j), cells);
    fn(j, std::span<const double>(cells));
  }
}

}  // namespace

double log_likelihood_nominal(const CategoricalDataset& data,
                              const ParameterState& state, const ModelSpec& spec) {
  check_nominal(data, state, spec);
  double total = 0.0;
  for_each_column(data, state,
                  [&](std::size_t, std::span<const double> cells) { total += kernels::sum(cells); });
  return total;
}

std::vector<double> pointwise_log_likelihood_nominal(const CategoricalDataset& data,
                                                     const ParameterState& state,
                                                     const ModelSpec& spec) {
  check_nominal(data, state, spec);
  std::vector<double> per_unit(data.n(), 0.0);
  for_each_column(data, state, [&](std::size_t, std::span<const double> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) per_unit[i] += cells[i];
  });
  return per_unit;
}

std::vector<double> pointwise_log_likelihood_any(const CategoricalDataset& data,
                                                 const ParameterState& state,
                                                 const ModelSpec& spec) {
  return is_ordinal(spec.kind) ? pointwise_log_likelihood(data, state, spec)
                               : pointwise_log_likelihood_nominal(data, state, spec);
}

double log_likelihood_any(const CategoricalDataset& data, const ParameterState& state,
                          const ModelSpec& spec) {
  return is_ordinal(spec.kind) ? log_likelihood(data, state, spec)
                               : log_likelihood_nominal(data, state, spec);
}

}  // namespace polyfa
