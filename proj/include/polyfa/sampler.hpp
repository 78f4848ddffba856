#pragma once

// Block Metropolis-Hastings over the full conditionals of the ordinal and
// nominal factor models.
//
// One sweep updates, in order: each loadings row beta_j (for nominal models
// each (j, k) row, or each row j when loadings are shared across
// categories), each idiosyncratic variance sigma^2_j (ordinal only), then each
// factor vector f_i. Every block uses a Gaussian random walk on its free
// coordinates; sigma^2_j moves on the log scale with the Jacobian term.
// Per-block step sizes follow a Robbins-Monro recursion toward the target
// acceptance rate during burn-in and are frozen afterwards.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "polyfa/core.hpp"
#include "polyfa/numeric.hpp"

namespace polyfa {

struct McmcConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  std::size_t thin = 9;
  std::size_t n_chains = 2;
  std::uint64_t seed = 1;
  double target_acceptance = 0.30;
  /// Number of leading burn-in iterations that adapt step sizes; 0 means the
  /// whole burn-in.
  std::size_t adapt_window = 0;
  /// Worker threads for independent chains.
  std::size_t threads = 1;

  void validate() const;
  /// floor((iterations - burn_in) / thin)
  std::size_t retained_per_chain() const;
};

/// Per-block random-walk scales.
struct StepSizes {
  std::vector<double> loadings;   // loading_sets * p (or p when shared)
  std::vector<double> variances;  // p (empty for nominal)
  std::vector<double> factors;    // n

  static StepSizes defaults(const ParameterState& state, bool shared_loadings);
};

enum class BlockKind { loadings_row, variance, factor, nominal_loadings_row };

struct Block {
  BlockKind kind = BlockKind::loadings_row;
  std::size_t index = 0;
  /// Loading set for nominal rows (0 for category 2).
  std::size_t set = 0;
};

/// Post-burn-in acceptance rate of every block.
struct AcceptanceRates {
  std::vector<double> loadings;
  std::vector<double> variances;
  std::vector<double> factors;

  double mean_loadings() const;
  double mean_variances() const;
  double mean_factors() const;
};

/// Retained draws of one chain, flattened draw-major.
struct ChainDraws {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::size_t p = 0, q = 0, n = 0, loading_sets = 1;
  bool has_variances = true;
  std::vector<double> loadings;   // count x (loading_sets * p * q)
  std::vector<double> variances;  // count x p
  std::vector<double> factors;    // count x (q * n)
  std::vector<double> pointwise;  // count x n, per-unit log-likelihood
  std::vector<double> log_lik;    // count
  AcceptanceRates acceptance;
  StepSizes steps;

  ParameterState state(std::size_t s) const;
  double beta(std::size_t s, std::size_t j, std::size_t l, std::size_t set = 0) const {
    return loadings[s * loading_sets * p * q + (set * p + j) * q + l];
  }
  double variance(std::size_t s, std::size_t j) const { return variances[s * p + j]; }
  double factor(std::size_t s, std::size_t l, std::size_t i) const {
    return factors[s * q * n + l * n + i];
  }
};

struct PosteriorSample {
  ModelSpec spec;
  McmcConfig config;
  std::size_t n = 0, p = 0;
  std::vector<ChainDraws> chains;

  std::size_t q() const { return spec.q; }
  std::size_t total_draws() const;
};

/// log prior of one loadings row: N(0, C0) below the diagonal, N(0, C0)
/// truncated to (0, inf) on it, point mass at zero above it.
double log_prior_loadings_row(std::size_t j, std::span<const double> row,
                              const PriorConfig& prior);

/// Data term of column j plus the row's log prior. For nominal specs `set`
/// selects beta^{(set + 2)}; the complete cell likelihood is used since the
/// normalizing denominator couples all categories.
double log_conditional_loadings_row(std::size_t j, const ParameterState& state,
                                    const CategoricalDataset& data, const ModelSpec& spec,
                                    std::size_t set = 0);

/// Data term of column j plus the IG(nu/2, nu s^2/2) log density of sigma^2_j.
double log_conditional_variance(std::size_t j, const ParameterState& state,
                                const CategoricalDataset& data, const ModelSpec& spec);

/// Data term of row i minus f_i'f_i / 2 (constant dropped).
double log_conditional_factor(std::size_t i, const ParameterState& state,
                              const CategoricalDataset& data, const ModelSpec& spec);

/// One random-walk Metropolis-Hastings move on `block`, evaluated without
/// caches. Returns whether the proposal was accepted.
bool mh_block_step(const Block& block, ParameterState& state,
                   const CategoricalDataset& data, const ModelSpec& spec,
                   const StepSizes& steps, Rng& rng);

/// Starting point of chain `chain_index`: diagonal loadings 1 + 0.5 c, other
/// free loadings 0, sigma^2 = 1, factors N(0, 0.1).
ParameterState initial_state(const CategoricalDataset& data, const ModelSpec& spec,
                             std::size_t chain_index, Rng& rng);

ChainDraws run_chain(const CategoricalDataset& data, const ModelSpec& spec,
                     const McmcConfig& config, std::uint64_t chain_seed,
                     std::size_t chain_index = 0);

/// Chain c uses derive_seed(config.seed, c).
PosteriorSample run_chains(const CategoricalDataset& data, const ModelSpec& spec,
                           const McmcConfig& config);

}  // namespace polyfa
