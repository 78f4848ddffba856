#pragma once

// Convergence checks, posterior summaries, multimodality flags and the
// Monte-Carlo recovery metrics used by simulation studies.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polyfa/sampler.hpp"

namespace polyfa {

/// Gelman-Rubin potential scale reduction, sqrt((W + (1 + 1/m) B/n) / W).
/// Requires at least two chains of equal length >= 10.
double psrf(const std::vector<std::vector<double>>& chains);

/// Initial positive sequence estimate, capped at the draw count. A constant
/// sequence returns its length.
double effective_sample_size(std::span<const double> draws);

/// (g^2 + 1) / (k + 3 (n - 1)^2 / ((n - 2)(n - 3))) with sample-adjusted
/// skewness g and excess kurtosis k. NaN for a constant sequence.
double bimodality_coefficient(std::span<const double> draws);

/// bimodality_coefficient > 5/9. Requires at least 100 draws.
bool bimodality_flag(std::span<const double> draws);

/// Linear-interpolation sample quantile (R type 7).
double quantile(std::span<const double> draws, double prob);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double lower = 0.0;  // 2.5%
  double upper = 0.0;  // 97.5%
  double ess = 0.0;
  double psrf = 1.0;
  bool bimodal = false;
};

/// Per-chain traces of one scalar parameter.
struct ParameterTrace {
  std::string name;
  std::vector<std::vector<double>> chains;
  std::vector<double> pooled() const;
};

/// Traces of every free loading (beta_j_l, or beta_j_l_k for nominal sets),
/// every sigma2_j and, when requested, every factor score f_l_i. Indices in
/// names are 1-based.
std::vector<ParameterTrace> parameter_traces(const PosteriorSample& sample,
                                             bool include_factors = true);

SummaryRow summarize_trace(const ParameterTrace& trace);
std::vector<SummaryRow> summarize(const PosteriorSample& sample, bool include_factors = true);

/// Largest PSRF among the rows; 1 if empty.
double max_psrf(const std::vector<SummaryRow>& rows);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

struct IntervalEstimate {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct MonteCarloMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double coverage = 0.0;  // percent
};

MonteCarloMetrics monte_carlo_metrics(double true_value,
                                      std::span<const IntervalEstimate> replicates);

/// 100 * sum_l beta_l^2 / (sum_l beta_l^2 + sigma2).
double variance_decomposition(std::span<const double> beta_row, double sigma2);
/// Single-factor share 100 * beta_l^2 / (sum beta^2 + sigma2) for each l.
std::vector<double> variance_decomposition_by_factor(std::span<const double> beta_row,
                                                     double sigma2);

struct DvSummary {
  std::string variable;
  IntervalEstimate total;
  std::vector<IntervalEstimate> by_factor;
};

/// Posterior mean and 95% interval of DV_j, overall and per factor, pooled
/// over chains. Ordinal samples only.
std::vector<DvSummary> variance_decomposition_summary(
    const PosteriorSample& sample, const std::vector<std::string>& names = {});

void write_dv_csv(std::ostream& out, const std::vector<DvSummary>& rows);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins spanning [min, max] of the draws.
std::vector<HistogramBin> histogram(std::span<const double> draws, std::size_t bins);

}  // namespace polyfa
