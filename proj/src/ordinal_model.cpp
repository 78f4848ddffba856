#include "polyfa/ordinal_model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "kernels/kernels_internal.hpp"
#include "polyfa/kernels.hpp"
#include "polyfa/numeric.hpp"

namespace polyfa {
namespace {

void require_positive_sigma(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
}

double link_cdf(LinkKind link, double z) {
  return link == LinkKind::probit ? normal_cdf(z) : expit(z);
}

}  // namespace

double cumulative_prob(LinkKind link, double alpha, double eta, double sigma) {
  require_positive_sigma(sigma);
  if (alpha == -INFINITY) return 0.0;
  if (alpha == INFINITY) return 1.0;
  return link_cdf(link, (alpha - eta) / sigma);
}

std::vector<double> category_probs(LinkKind link, std::span<const double> cutoffs,
                                   double eta, double sigma, int categories) {
  require_positive_sigma(sigma);
  if (categories < 2 || cutoffs.size() != static_cast<std::size_t>(categories - 1))
    throw DimensionError("category_probs: expected K - 1 cutoffs");
  for (std::size_t k = 1; k < cutoffs.size(); ++k)
    if (!(cutoffs[k] > cutoffs[k - 1]))
      throw ValidationError("category_probs: non-monotone cutoffs");

  std::vector<double> probs(static_cast<std::size_t>(categories));
  for (int k = 1; k <= categories; ++k) {
    const double lower = k == 1 ? -INFINITY : cutoffs[static_cast<std::size_t>(k - 2)];
    const double upper =
        k == categories ? INFINITY : cutoffs[static_cast<std::size_t>(k - 1)];
    double lo = (lower - eta) / sigma;
    double hi = (upper - eta) / sigma;
    kernels::detail::reflect(lo, hi);
    probs[static_cast<std::size_t>(k - 1)] = link_cdf(link, hi) - link_cdf(link, lo);
  }
  return probs;
}

double cell_log_prob(LinkKind link, double lower, double upper, double eta,
                     double sigma) {
  require_positive_sigma(sigma);
  return kernels::detail::ordinal_cell(link, lower, upper, eta, 1.0 / sigma);
}

void check_dimensions(const CategoricalDataset& data, const ParameterState& state,
                      const ModelSpec& spec) {
  state.check_shape();
  if (state.p != data.p() || state.n != data.n() || state.q != spec.q)
    throw DimensionError("state dimensions (p=" + std::to_string(state.p) +
                         ", q=" + std::to_string(state.q) +
                         ", n=" + std::to_string(state.n) +
                         ") do not match dataset/spec (p=" + std::to_string(data.p()) +
                         ", q=" + std::to_string(spec.q) +
                         ", n=" + std::to_string(data.n()) + ")");
  if (is_ordinal(spec.kind)) {
    if (state.variances.size() != data.p())
      throw DimensionError("ordinal state requires p variances");
    if (!spec.cutoffs || spec.cutoffs->p() != data.p())
      throw DimensionError("ordinal spec requires one cutoff row per variable");
  }
}

namespace {

void column_log_probs(const CategoricalDataset& data, const ParameterState& state,
                      const ModelSpec& spec, std::size_t j, std::vector<double>& eta,
                      std::vector<double>& lower, std::vector<double>& upper,
                      std::vector<double>& out) {
  const std::size_t n = data.n();
  eta.resize(n);
  lower.resize(n);
  upper.resize(n);
  out.resize(n);
  kernels::linear_predictor(state.beta_row(j), state.factors, eta);
  const auto col = data.column(j);
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = spec.cutoffs->alpha(j, col[i] - 1);
    upper[i] = spec.cutoffs->alpha(j, col[i]);
  }
  if (!(state.variances[j] > 0.0)) {
    std::fill(out.begin(), out.end(), -INFINITY);
    return;
  }
  kernels::ordinal_logprob(link_of(spec.kind), lower, upper, eta,
                           1.0 / std::sqrt(state.variances[j]), out);
}

}  // namespace

double log_likelihood(const CategoricalDataset& data, const ParameterState& state,
                      const ModelSpec& spec) {
  if (!is_ordinal(spec.kind))
    throw ValidationError("log_likelihood: spec is not ordinal");
  check_dimensions(data, state, spec);
  std::vector<double> eta, lower, upper, cells;
  double total = 0.0;
  for (std::size_t j = 0; j < data.p(); ++j) {
    column_log_probs(data, state, spec, j, eta, lower, upper, cells);
    total += kernels::sum(cells);
  }
  return total;
}

std::vector<double> pointwise_log_likelihood(const CategoricalDataset& data,
                                             const ParameterState& state,
                                             const ModelSpec& spec) {
  if (!is_ordinal(spec.kind))
    throw ValidationError("pointwise_log_likelihood: spec is not ordinal");
  check_dimensions(data, state, spec);
  std::vector<double> eta, lower, upper, cells;
  std::vector<double> per_unit(data.n(), 0.0);
  for (std::size_t j = 0; j < data.p(); ++j) {
    column_log_probs(data, state, spec, j, eta, lower, upper, cells);
    for (std::size_t i = 0; i < data.n(); ++i) per_unit[i] += cells[i];
  }
  return per_unit;
}

double marginal_cumulative_probit(double alpha, std::span<const double> beta_row,
                                  double sigma) {
  require_positive_sigma(sigma);
  double total = sigma * sigma;
  for (double b : beta_row) total += b * b;
  if (alpha == -INFINITY) return 0.0;
  if (alpha == INFINITY) return 1.0;
  return normal_cdf(alpha / std::sqrt(total));
}

double marginal_cumulative(LinkKind link, double alpha, std::span<const double> beta_row,
                           double sigma) {
  require_positive_sigma(sigma);
  if (alpha == -INFINITY) return 0.0;
  if (alpha == INFINITY) return 1.0;
  double b2 = 0.0;
  for (double b : beta_row) b2 += b * b;
  const double b = std::sqrt(b2);
  auto integrand = [&](double z) {
    const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return link_cdf(link, (alpha - b * z) / sigma) * density;
  };
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(integrand, -INFINITY, INFINITY, 15, 1e-13);
}

Matrix latent_covariance(const ParameterState& state) {
  if (state.variances.size() != state.p)
    throw DimensionError("latent_covariance: state has no variances");
  Matrix cov(state.p, state.p);
  for (std::size_t a = 0; a < state.p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t l = 0; l < state.q; ++l) s += state.beta(a, l) * state.beta(b, l);
      if (a == b) s += state.variances[a];
      cov(a, b) = s;
      cov(b, a) = s;
    }
  }
  return cov;
}

bool cholesky_in_place(Matrix& a) {
  if (a.rows != a.cols) throw DimensionError("cholesky: matrix is not square");
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / d;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

}  // namespace polyfa
