#pragma once

// Synthetic data for the ordinal and nominal models and the Monte-Carlo
// replication harness.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polyfa/comparison.hpp"
#include "polyfa/diagnostics.hpp"
#include "polyfa/sampler.hpp"

namespace polyfa {

struct GeneratedData {
  CategoricalDataset data;
  std::vector<double> factors;    // q x n, factor-major
  std::optional<CutoffSet> cutoffs;
  std::vector<double> latent;     // n x p row-major, only when requested
};

/// Cutoffs placed at the given quantiles of each variable's marginal latent
/// distribution y*_j = beta_j' f + e_j.
CutoffSet generator_cutoffs(LinkKind link, const ParameterState& truth,
                            const std::vector<double>& quantiles);

/// `truth` supplies p x q loadings and p variances (its n and factors are
/// ignored). Ordinal kinds only.
GeneratedData generate_ordinal(ModelKind kind, const ParameterState& truth,
                               const std::vector<double>& cutoff_quantiles, std::size_t n,
                               std::uint64_t seed, bool keep_latent = false);

/// `truth` supplies K - 1 loading sets.
GeneratedData generate_nominal(const ParameterState& truth, std::size_t n, std::uint64_t seed);

struct StudyGenerator {
  ModelKind kind = ModelKind::ordinal_probit;
  std::size_t n = 300;
  ParameterState truth;  // n = 0, factors empty
  std::vector<double> cutoff_quantiles;
};

struct StudyFit {
  ModelKind kind = ModelKind::ordinal_probit;
  std::vector<std::size_t> q;
  McmcConfig mcmc;
  bool estimate_cutoffs = false;
  PriorConfig prior;
  bool shared_loadings = false;
};

struct StudyMetrics {
  bool loadings = true;
  bool variances = true;
  bool dv = true;
  bool factors = true;
};

struct StudyConfig {
  std::string name = "study";
  std::uint64_t seed = 1;
  std::size_t replicates = 1;
  std::size_t threads = 1;
  StudyGenerator generator;
  StudyFit fit;
  StudyMetrics metrics;
};

/// Parses the JSON study format. Errors name the offending key path.
StudyConfig parse_study_config(const std::string& text);
StudyConfig load_study_config(const std::string& path);

/// Replicate r draws its data with derive_seed(seed, 2r) and fits with
/// derive_seed(seed, 2r + 1).
std::uint64_t replicate_data_seed(std::uint64_t master, std::size_t r);
std::uint64_t replicate_fit_seed(std::uint64_t master, std::size_t r);

struct ParameterRecovery {
  std::string name;
  double truth = 0.0;
  MonteCarloMetrics metrics;
  std::size_t replicates = 0;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t fit_seed = 0;
  std::optional<std::string> error;
  /// One per fitted q; information criteria only when several q are fitted.
  std::vector<CriteriaRow> criteria;
  std::vector<IntervalEstimate> estimates;  // aligned with StudyReport::parameter_names
  double factor_mae = NAN;
  double factor_coverage = NAN;             // percent of units covered
  double max_psrf = NAN;
};

struct StudyReport {
  StudyConfig config;
  std::vector<std::string> parameter_names;
  std::vector<double> truths;
  std::vector<ReplicateOutcome> replicates;
  std::vector<ParameterRecovery> recovery;
  /// selection[c][k]: replicates where criterion c (AIC, BIC, WAIC) chose
  /// config.fit.q[k].
  std::vector<std::vector<std::size_t>> selection;
  std::size_t successful = 0;
};

StudyReport replicate_study(const StudyConfig& config);

/// The recovery, selection, replicate and factor tables, one file each,
/// written into `dir`.
void write_study_report(const StudyReport& report, const std::string& dir);
void write_recovery_csv(std::ostream& out, const StudyReport& report);
void write_selection_csv(std::ostream& out, const StudyReport& report);
void write_replicates_csv(std::ostream& out, const StudyReport& report);

/// Built-in one-factor ordinal preset: n = 300, p = 5, K = 4.
StudyConfig quick_preset(const std::string& name);

}  // namespace polyfa
