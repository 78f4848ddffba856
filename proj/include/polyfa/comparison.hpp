#pragma once

// Information criteria for choosing the number of factors.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyfa/sampler.hpp"

namespace polyfa {

double aic(double max_log_lik, std::size_t m);
double bic(double max_log_lik, std::size_t m, std::size_t n);

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

/// `pointwise` is draws x units, row-major: log l(theta^s; y_i).
WaicResult waic(std::span<const double> pointwise, std::size_t draws, std::size_t units);
/// Pools every retained draw of every chain.
WaicResult waic(const PosteriorSample& sample);

/// Number of parameters penalized by AIC/BIC: loadings (every set for nominal
/// models unless shared) plus p variances for ordinal models.
std::size_t criteria_parameter_count(ModelKind kind, std::size_t p, std::size_t q,
                                     std::size_t loading_sets = 1, bool shared = false);

/// Factor-integrated likelihood p(y_i | beta, Sigma) = E_f[prod_j pi_ij(f)],
/// f ~ N_q(0, I), by quasi-Monte Carlo importance sampling. Each unit's
/// proposal is normal with a supplied mean and covariance of its factor
/// scores (normally their posterior moments), the covariance multiplied by
/// `inflation`. All units share one Sobol point set, so the estimate is
/// deterministic.
class MarginalLikelihood {
public:
  static constexpr std::size_t kDefaultNodes = 2048;

  /// `centers` is q x n factor-major; `covariances` holds n row-major q x q
  /// blocks. `nodes` 0 picks kDefaultNodes.
  MarginalLikelihood(const CategoricalDataset& data, const ModelSpec& spec,
                     std::span<const double> centers, std::span<const double> covariances,
                     std::size_t nodes = 0, double inflation = 2.0);

  /// Centres on the pooled posterior moments of each unit's factor scores.
  static MarginalLikelihood from_sample(const CategoricalDataset& data,
                                        const PosteriorSample& sample, std::size_t nodes = 0);

  /// log p(y_i | beta, Sigma) per unit; the state's factors are ignored.
  std::vector<double> pointwise(const ParameterState& state) const;
  double total(const ParameterState& state) const;
  std::size_t nodes() const { return grid_; }

private:
  const CategoricalDataset* data_;
  ModelSpec spec_;
  std::size_t q_ = 0, n_ = 0, grid_ = 0;
  std::vector<double> nodes_;        // per unit: q x nodes, factor-major
  std::vector<double> log_weights_;  // per unit: nodes
};

struct CriteriaOptions {
  /// Retained draws (evenly spaced over the pooled chains) used for the
  /// factor-integrated likelihood.
  std::size_t max_draws = 200;
  std::size_t nodes = 0;  // 0: MarginalLikelihood::kDefaultNodes
};

/// Largest retained joint log-likelihood and where it occurred.
struct PlugIn {
  double log_lik = -INFINITY;
  std::size_t chain = 0;
  std::size_t draw = 0;
};
PlugIn best_draw(const PosteriorSample& sample);

struct CriteriaRow {
  std::size_t q = 0;
  double aic = NAN, bic = NAN, waic = NAN, lppd = NAN, p_waic = NAN;
  std::size_t m = 0;
  double max_log_lik = NAN;
  /// Same quantities conditioned on the sampled factor scores.
  double max_log_lik_conditional = NAN;
  double waic_conditional = NAN;
  bool best_aic = false, best_bic = false, best_waic = false;
  double max_psrf = NAN;
  std::vector<std::string> bimodal;  // parameters flagged as multimodal
  std::optional<std::string> error;  // fit failure, criteria left NaN
};

struct CriteriaReport {
  std::size_t n = 0;
  std::size_t p = 0;
  ModelKind kind = ModelKind::ordinal_probit;
  std::vector<CriteriaRow> rows;

  /// Flags the minimizer of each criterion among rows without errors.
  void mark_best();
  std::optional<std::size_t> best_q_aic() const;
  std::optional<std::size_t> best_q_bic() const;
  std::optional<std::size_t> best_q_waic() const;
};

/// Criteria of one fitted sample. AIC and BIC plug in the evaluated draw
/// with the largest factor-integrated log-likelihood; WAIC uses the
/// factor-integrated pointwise likelihood over the same draws.
CriteriaRow criteria_row(const PosteriorSample& sample, const CategoricalDataset& data,
                         const CriteriaOptions& options = {});

/// Fits every spec with run_chains and tabulates criteria. A fit that
/// throws is recorded in its row rather than aborting the report.
CriteriaReport compare_models(const CategoricalDataset& data,
                              const std::vector<ModelSpec>& specs, const McmcConfig& config,
                              const CriteriaOptions& options = {});

/// Columns: q,AIC,BIC,WAIC,lppd,pWAIC,m,best_AIC,best_BIC,best_WAIC
void write_criteria_csv(std::ostream& out, const CriteriaReport& report);
void write_criteria_json(std::ostream& out, const CriteriaReport& report);

}  // namespace polyfa
