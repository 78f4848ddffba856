#include <boost/random/sobol.hpp>
#include <cmath>

#include "polyfa/comparison.hpp"
#include "polyfa/kernels.hpp"
#include "polyfa/numeric.hpp"
#include "polyfa/ordinal_model.hpp"

namespace polyfa {

MarginalLikelihood::MarginalLikelihood(const CategoricalDataset& data, const ModelSpec& spec,
                                       std::span<const double> centers,
                                       std::span<const double> covariances, std::size_t nodes,
                                       double inflation)
    : data_(&data), spec_(spec), q_(spec.q), n_(data.n()), grid_(nodes == 0 ? kDefaultNodes : nodes) {
  if (q_ == 0) throw ValidationError("marginal likelihood: q must be positive");
  if (centers.size() != q_ * n_ || covariances.size() != n_ * q_ * q_)
    throw DimensionError("marginal likelihood: moments must match q and n");
  if (!(inflation >= 1.0)) throw ValidationError("marginal likelihood: inflation must be >= 1");

  // Standard normal Sobol points, the all-zero first point skipped.
  boost::random::sobol qrng(q_);
  qrng.discard(q_);
  std::vector<double> z(q_ * grid_);
  std::vector<double> base_log_w(grid_);
  const double scale = std::ldexp(1.0, -53);
  for (std::size_t g = 0; g < grid_; ++g) {
    double zz = 0.0;
    for (std::size_t l = 0; l < q_; ++l) {
      const double u = (static_cast<double>(qrng() >> 11) + 0.5) * scale;
      const double v = normal_quantile(u);
      z[l * grid_ + g] = v;
      zz += v * v;
    }
    base_log_w[g] = 0.5 * zz - std::log(static_cast<double>(grid_));
  }

  nodes_.resize(n_ * q_ * grid_);
  log_weights_.resize(n_ * grid_);
  const double sd = std::sqrt(inflation);
  const double log_sd = 0.5 * static_cast<double>(q_) * std::log(inflation);
  Matrix chol(q_, q_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t a = 0; a < q_; ++a)
      for (std::size_t b = 0; b < q_; ++b) chol(a, b) = covariances[i * q_ * q_ + a * q_ + b];
    for (std::size_t a = 0; a < q_; ++a) chol(a, a) += 1e-8;
    if (!cholesky_in_place(chol)) {
      for (std::size_t a = 0; a < q_; ++a)
        for (std::size_t b = 0; b < q_; ++b)
          chol(a, b) = a == b ? std::sqrt(std::max(covariances[i * q_ * q_ + a * q_ + a], 1e-8))
                              : 0.0;
    }
    double log_det = log_sd;
    for (std::size_t a = 0; a < q_; ++a) log_det += std::log(chol(a, a));

    double* unit_nodes = nodes_.data() + i * q_ * grid_;
    double* unit_lw = log_weights_.data() + i * grid_;
    for (std::size_t g = 0; g < grid_; ++g) {
      double ff = 0.0;
      for (std::size_t a = 0; a < q_; ++a) {
        double v = centers[a * n_ + i];
        for (std::size_t b = 0; b <= a; ++b) v += sd * chol(a, b) * z[b * grid_ + g];
        ff += v * v;
        unit_nodes[a * grid_ + g] = v;
      }
      // prior density over proposal density; the 2*pi terms cancel
      unit_lw[g] = base_log_w[g] + log_det - 0.5 * ff;
    }
  }
}

MarginalLikelihood MarginalLikelihood::from_sample(const CategoricalDataset& data,
                                                   const PosteriorSample& sample,
                                                   std::size_t nodes) {
  const std::size_t q = sample.spec.q, n = data.n();
  std::vector<double> mean(q * n, 0.0), cov(n * q * q, 0.0);
  std::size_t draws = 0;
  for (const auto& c : sample.chains) {
    if (c.q != q || c.n != n) throw DimensionError("marginal likelihood: sample does not match data");
    for (std::size_t s = 0; s < c.count; ++s) {
      for (std::size_t l = 0; l < q; ++l)
        for (std::size_t i = 0; i < n; ++i) mean[l * n + i] += c.factor(s, l, i);
      ++draws;
    }
  }
  if (draws < 2) throw ValidationError("marginal likelihood: need at least two draws");
  for (double& v : mean) v /= static_cast<double>(draws);
  for (const auto& c : sample.chains)
    for (std::size_t s = 0; s < c.count; ++s)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < q; ++a) {
          const double da = c.factor(s, a, i) - mean[a * n + i];
          for (std::size_t b = 0; b <= a; ++b)
            cov[i * q * q + a * q + b] += da * (c.factor(s, b, i) - mean[b * n + i]);
        }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        double& v = cov[i * q * q + a * q + b];
        v /= static_cast<double>(draws - 1);
        cov[i * q * q + b * q + a] = v;
      }
  return MarginalLikelihood(data, sample.spec, mean, cov, nodes);
}

std::vector<double> MarginalLikelihood::pointwise(const ParameterState& state) const {
  const CategoricalDataset& data = *data_;
  const std::size_t p = data.p();
  if (state.p != p || state.q != q_)
    throw DimensionError("marginal likelihood: state does not match p and q");
  const bool ordinal = is_ordinal(spec_.kind);
  const auto& k = kernels::active();
  const std::size_t m = state.loading_sets;

  std::vector<double> out(n_);
  std::vector<double> acc(grid_), cell(grid_), lower(grid_), upper(grid_);
  std::vector<double> scores(ordinal ? grid_ : m * grid_);
  std::vector<int> y(grid_);
  std::vector<double> inv_sigma(p, 0.0);
  if (ordinal)
    for (std::size_t j = 0; j < p; ++j) inv_sigma[j] = 1.0 / std::sqrt(state.variances[j]);

  for (std::size_t i = 0; i < n_; ++i) {
    const double* unit_nodes = nodes_.data() + i * q_ * grid_;
    std::copy_n(log_weights_.data() + i * grid_, grid_, acc.begin());
    for (std::size_t j = 0; j < p; ++j) {
      const int yij = data.value(i, j);
      if (ordinal) {
        k.linear_predictor(state.beta_row(j).data(), q_, unit_nodes, grid_, scores.data());
        std::fill(lower.begin(), lower.end(), spec_.cutoffs->alpha(j, yij - 1));
        std::fill(upper.begin(), upper.end(), spec_.cutoffs->alpha(j, yij));
        k.ordinal_logprob(link_of(spec_.kind), lower.data(), upper.data(), scores.data(),
                          inv_sigma[j], grid_, cell.data());
      } else {
        for (std::size_t s = 0; s < m; ++s)
          k.linear_predictor(state.beta_row(j, s).data(), q_, unit_nodes, grid_,
                             scores.data() + s * grid_);
        std::fill(y.begin(), y.end(), yij);
        k.nominal_logprob(scores.data(), m + 1, y.data(), grid_, cell.data());
      }
      for (std::size_t g = 0; g < grid_; ++g) acc[g] += cell[g];
    }
    out[i] = log_sum_exp(acc);
  }
  return out;
}

double MarginalLikelihood::total(const ParameterState& state) const {
  double s = 0.0;
  for (double v : pointwise(state)) s += v;
  return s;
}

}  // namespace polyfa
