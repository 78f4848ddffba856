#include "polyfa/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "kernels/kernels_internal.hpp"
#include "polyfa/kernels.hpp"
#include "polyfa/ordinal_model.hpp"

namespace polyfa {
namespace {

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kMinLogStep = -14.0;
constexpr double kMaxLogStep = 7.0;

std::size_t free_in_row(std::size_t j, std::size_t q) { return std::min(j + 1, q); }

void check_run_config(const McmcConfig& c) {
  if (c.iterations == 0) throw ValidationError("iterations: must be positive");
  if (c.burn_in >= c.iterations)
    throw ValidationError("burn_in: must be smaller than iterations");
  if (c.thin == 0) throw ValidationError("thin: must be at least 1");
  if (!(c.target_acceptance > 0.0 && c.target_acceptance < 1.0))
    throw ValidationError("target_acceptance: must lie in (0, 1)");
}

std::size_t set_count(const CategoricalDataset& data, const ModelSpec& spec) {
  if (is_ordinal(spec.kind)) return 1;
  const auto k = data.uniform_categories();
  if (!k) throw ValidationError("nominal model: all variables must share K");
  return static_cast<std::size_t>(*k - 1);
}

bool accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  return std::log(rng.uniform_open()) < log_ratio;
}

// Data term of column j, uncached.
double column_data_term(std::size_t j, const ParameterState& state,
                        const CategoricalDataset& data, const ModelSpec& spec) {
  const std::size_t n = data.n();
  if (n == 0) return 0.0;
  std::vector<double> cells(n);
  if (is_ordinal(spec.kind)) {
    if (!(state.variances[j] > 0.0)) return -INFINITY;
    std::vector<double> eta(n), lower(n), upper(n);
    kernels::linear_predictor(state.beta_row(j), state.factors, eta);
    const auto col = data.column(j);
    for (std::size_t i = 0; i < n; ++i) {
      lower[i] = spec.cutoffs->alpha(j, col[i] - 1);
      upper[i] = spec.cutoffs->alpha(j, col[i]);
    }
    kernels::ordinal_logprob(link_of(spec.kind), lower, upper, eta,
                             1.0 / std::sqrt(state.variances[j]), cells);
  } else {
    const std::size_t m = state.loading_sets;
    std::vector<double> scores(m * n);
    for (std::size_t k = 0; k < m; ++k)
      kernels::linear_predictor(state.beta_row(j, k), state.factors,
                                std::span<double>(scores.data() + k * n, n));
    kernels::nominal_logprob(scores, m + 1, data.column(j), cells);
  }
  return kernels::sum(cells);
}

double unit_data_term(std::size_t i, const ParameterState& state,
                      const CategoricalDataset& data, const ModelSpec& spec) {
  double total = 0.0;
  const std::size_t q = state.q;
  for (std::size_t j = 0; j < data.p(); ++j) {
    if (is_ordinal(spec.kind)) {
      if (!(state.variances[j] > 0.0)) return -INFINITY;
      double eta = 0.0;
      for (std::size_t l = 0; l < q; ++l) eta += state.beta(j, l) * state.factor(l, i);
      const int y = data.value(i, j);
      total += kernels::detail::ordinal_cell(link_of(spec.kind),
                                             spec.cutoffs->alpha(j, y - 1),
                                             spec.cutoffs->alpha(j, y), eta,
                                             1.0 / std::sqrt(state.variances[j]));
    } else {
      const std::size_t m = state.loading_sets;
      std::vector<double> scores(m);
      for (std::size_t k = 0; k < m; ++k) {
        double s = 0.0;
        for (std::size_t l = 0; l < q; ++l) s += state.beta(j, l, k) * state.factor(l, i);
        scores[k] = s;
      }
      total += kernels::detail::nominal_cell(scores.data(), 1, m, data.value(i, j), 0);
    }
  }
  return total;
}

void check_inputs(const CategoricalDataset& data, const ModelSpec& spec,
                  const ParameterState& state) {
  check_dimensions(data, state, spec);
  if (state.loading_sets != set_count(data, spec))
    throw DimensionError("state carries the wrong number of loading sets");
}

// Cached sweep engine. Keeps the linear predictors (or nominal scores) and
// cell log-probabilities of the current state so each block move evaluates
// only the cells it touches.
class ChainEngine {
public:
  ChainEngine(const CategoricalDataset& data, const ModelSpec& spec, ParameterState state)
      : data_(data), spec_(spec), state_(std::move(state)), n_(data.n()), p_(data.p()),
        q_(spec.q), nominal_(!is_ordinal(spec.kind)), m_(state_.loading_sets) {
    cell_.assign(p_ * n_, 0.0);
    scratch_cell_.resize(n_);
    if (nominal_) {
      scores_.assign(p_ * m_ * n_, 0.0);
      scratch_scores_.resize(m_ * n_);
      for (std::size_t j = 0; j < p_; ++j) {
        for (std::size_t k = 0; k < m_; ++k)
          kernels::active().linear_predictor(state_.beta_row(j, k).data(), q_,
                                             state_.factors.data(), n_, score_ptr(j, k));
        kernels::active().nominal_logprob(score_ptr(j, 0), m_ + 1, data_.column(j).data(),
                                          n_, cell_ptr(j));
      }
    } else {
      link_ = link_of(spec.kind);
      lower_.resize(p_ * n_);
      upper_.resize(p_ * n_);
      eta_.assign(p_ * n_, 0.0);
      scratch_eta_.resize(n_);
      inv_sigma_.resize(p_);
      for (std::size_t j = 0; j < p_; ++j) {
        const auto col = data_.column(j);
        for (std::size_t i = 0; i < n_; ++i) {
          lower_[j * n_ + i] = spec.cutoffs->alpha(j, col[i] - 1);
          upper_[j * n_ + i] = spec.cutoffs->alpha(j, col[i]);
        }
        inv_sigma_[j] = 1.0 / std::sqrt(state_.variances[j]);
        kernels::active().linear_predictor(state_.beta_row(j).data(), q_,
                                           state_.factors.data(), n_, eta_.data() + j * n_);
        kernels::active().ordinal_logprob(link_, lower_.data() + j * n_,
                                          upper_.data() + j * n_, eta_.data() + j * n_,
                                          inv_sigma_[j], n_, cell_ptr(j));
      }
    }
    proposal_.resize(q_);
    unit_eta_.resize(p_ * std::max<std::size_t>(m_, 1));
    unit_cell_.resize(p_);
  }

  const ParameterState& state() const { return state_; }

  // Ordinal row j, or nominal row (j, set); with shared loadings every set
  // moves together and `set` is ignored.
  bool step_loadings(std::size_t j, std::size_t set, double step, Rng& rng) {
    const std::size_t free = free_in_row(j, q_);
    const auto current = state_.beta_row(j, set);
    std::copy(current.begin(), current.end(), proposal_.begin());
    for (std::size_t l = 0; l < free; ++l) proposal_[l] += step * rng.normal();
    const double prior_new = log_prior_loadings_row(j, proposal_, spec_.prior);
    const double prior_old = log_prior_loadings_row(j, current, spec_.prior);
    if (prior_new == -INFINITY) {
      rng.uniform_open();
      return false;
    }
    const double* f = state_.factors.data();
    const auto& k = kernels::active();
    if (!nominal_) {
      k.linear_predictor(proposal_.data(), q_, f, n_, scratch_eta_.data());
      k.ordinal_logprob(link_, lower_.data() + j * n_, upper_.data() + j * n_,
                        scratch_eta_.data(), inv_sigma_[j], n_, scratch_cell_.data());
    } else {
      std::copy(score_ptr(j, 0), score_ptr(j, 0) + m_ * n_, scratch_scores_.begin());
      if (spec_.shared_loadings) {
        k.linear_predictor(proposal_.data(), q_, f, n_, scratch_scores_.data());
        for (std::size_t s = 1; s < m_; ++s)
          std::copy(scratch_scores_.begin(), scratch_scores_.begin() + n_,
                    scratch_scores_.begin() + s * n_);
      } else {
        k.linear_predictor(proposal_.data(), q_, f, n_, scratch_scores_.data() + set * n_);
      }
      k.nominal_logprob(scratch_scores_.data(), m_ + 1, data_.column(j).data(), n_,
                        scratch_cell_.data());
    }
    const double log_ratio = k.sum(scratch_cell_.data(), n_) + prior_new -
                             k.sum(cell_ptr(j), n_) - prior_old;
    if (!accept(log_ratio, rng)) return false;

    const std::size_t first = spec_.shared_loadings ? 0 : set;
    const std::size_t last = spec_.shared_loadings ? m_ : set + 1;
    for (std::size_t s = first; s < last; ++s) {
      auto row = state_.beta_row(j, s);
      std::copy(proposal_.begin(), proposal_.end(), row.begin());
    }
    if (!nominal_)
      std::copy(scratch_eta_.begin(), scratch_eta_.end(), eta_.begin() + j * n_);
    else
      std::copy(scratch_scores_.begin(), scratch_scores_.end(), score_ptr(j, 0));
    std::copy(scratch_cell_.begin(), scratch_cell_.end(), cell_ptr(j));
    return true;
  }

  bool step_variance(std::size_t j, double step, Rng& rng) {
    const double old_var = state_.variances[j];
    const double log_old = std::log(old_var);
    const double log_new = log_old + step * rng.normal();
    const double new_var = std::exp(log_new);
    if (!(new_var > 0.0) || !std::isfinite(new_var)) {
      rng.uniform_open();
      return false;
    }
    const auto& k = kernels::active();
    const double inv_sigma = 1.0 / std::sqrt(new_var);
    k.ordinal_logprob(link_, lower_.data() + j * n_, upper_.data() + j * n_,
                      eta_.data() + j * n_, inv_sigma, n_, scratch_cell_.data());
    const double a = spec_.prior.ig_shape();
    const double b = spec_.prior.ig_scale();
    const double log_ratio =
        k.sum(scratch_cell_.data(), n_) + log_inverse_gamma_pdf(new_var, a, b) + log_new -
        k.sum(cell_ptr(j), n_) - log_inverse_gamma_pdf(old_var, a, b) - log_old;
    if (!accept(log_ratio, rng)) return false;
    state_.variances[j] = new_var;
    inv_sigma_[j] = inv_sigma;
    std::copy(scratch_cell_.begin(), scratch_cell_.end(), cell_ptr(j));
    return true;
  }

  bool step_factor(std::size_t i, double step, Rng& rng) {
    double prior_old = 0.0, prior_new = 0.0;
    for (std::size_t l = 0; l < q_; ++l) {
      const double f = state_.factor(l, i);
      proposal_[l] = f + step * rng.normal();
      prior_old += f * f;
      prior_new += proposal_[l] * proposal_[l];
    }
    double data_old = 0.0, data_new = 0.0;
    for (std::size_t j = 0; j < p_; ++j) {
      data_old += cell_[j * n_ + i];
      if (!nominal_) {
        double eta = 0.0;
        for (std::size_t l = 0; l < q_; ++l) eta += state_.beta(j, l) * proposal_[l];
        unit_eta_[j] = eta;
        unit_cell_[j] = kernels::detail::ordinal_cell(
            link_, lower_[j * n_ + i], upper_[j * n_ + i], eta, inv_sigma_[j]);
      } else {
        double* s = unit_eta_.data() + j * m_;
        for (std::size_t k = 0; k < m_; ++k) {
          double acc = 0.0;
          for (std::size_t l = 0; l < q_; ++l) acc += state_.beta(j, l, k) * proposal_[l];
          s[k] = acc;
        }
        unit_cell_[j] = kernels::detail::nominal_cell(s, 1, m_, data_.value(i, j), 0);
      }
      data_new += unit_cell_[j];
    }
    const double log_ratio = data_new - 0.5 * prior_new - data_old + 0.5 * prior_old;
    if (!accept(log_ratio, rng)) return false;
    for (std::size_t l = 0; l < q_; ++l) state_.factor(l, i) = proposal_[l];
    for (std::size_t j = 0; j < p_; ++j) {
      cell_[j * n_ + i] = unit_cell_[j];
      if (!nominal_) {
        eta_[j * n_ + i] = unit_eta_[j];
      } else {
        for (std::size_t k = 0; k < m_; ++k) score_ptr(j, k)[i] = unit_eta_[j * m_ + k];
      }
    }
    return true;
  }

  void pointwise(double* out) const {
    std::fill(out, out + n_, 0.0);
    for (std::size_t j = 0; j < p_; ++j) {
      const double* c = cell_.data() + j * n_;
      for (std::size_t i = 0; i < n_; ++i) out[i] += c[i];
    }
  }

private:
  double* cell_ptr(std::size_t j) { return cell_.data() + j * n_; }
  const double* cell_ptr(std::size_t j) const { return cell_.data() + j * n_; }
  double* score_ptr(std::size_t j, std::size_t k) {
    return scores_.data() + (j * m_ + k) * n_;
  }

  const CategoricalDataset& data_;
  const ModelSpec& spec_;
  ParameterState state_;
  std::size_t n_, p_, q_;
  bool nominal_;
  std::size_t m_;
  LinkKind link_ = LinkKind::probit;

  std::vector<double> lower_, upper_, eta_, inv_sigma_;
  std::vector<double> scores_;
  std::vector<double> cell_;
  std::vector<double> scratch_eta_, scratch_cell_, scratch_scores_;
  std::vector<double> proposal_, unit_eta_, unit_cell_;
};

struct Adapter {
  std::vector<double> log_step;
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> proposed;

  explicit Adapter(const std::vector<double>& steps)
      : log_step(steps.size()), accepted(steps.size(), 0), proposed(steps.size(), 0) {
    for (std::size_t b = 0; b < steps.size(); ++b) log_step[b] = std::log(steps[b]);
  }

  double step(std::size_t b) const { return std::exp(log_step[b]); }

  void record(std::size_t b, bool ok, bool adapting, double gain, double target,
              bool counting) {
    if (adapting) {
      log_step[b] += gain * ((ok ? 1.0 : 0.0) - target);
      log_step[b] = std::clamp(log_step[b], kMinLogStep, kMaxLogStep);
    }
    if (counting) {
      ++proposed[b];
      if (ok) ++accepted[b];
    }
  }

  std::vector<double> rates() const {
    std::vector<double> out(accepted.size(), 0.0);
    for (std::size_t b = 0; b < out.size(); ++b)
      if (proposed[b] > 0)
        out[b] = static_cast<double>(accepted[b]) / static_cast<double>(proposed[b]);
    return out;
  }

  std::vector<double> steps() const {
    std::vector<double> out(log_step.size());
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = std::exp(log_step[b]);
    return out;
  }
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void McmcConfig::validate() const {
  check_run_config(*this);
  if (n_chains < 2) throw ValidationError("chains: at least 2 chains are required");
}

std::size_t McmcConfig::retained_per_chain() const {
  if (burn_in >= iterations || thin == 0) return 0;
  return (iterations - burn_in) / thin;
}

StepSizes StepSizes::defaults(const ParameterState& state, bool shared_loadings) {
  StepSizes s;
  s.loadings.assign(shared_loadings ? state.p : state.loading_sets * state.p, 0.1);
  s.variances.assign(state.variances.size(), 0.3);
  s.factors.assign(state.n, 0.5);
  return s;
}

double AcceptanceRates::mean_loadings() const { return mean_of(loadings); }
double AcceptanceRates::mean_variances() const { return mean_of(variances); }
double AcceptanceRates::mean_factors() const { return mean_of(factors); }

ParameterState ChainDraws::state(std::size_t s) const {
  if (s >= count) throw DimensionError("ChainDraws::state: draw index out of range");
  ParameterState st = ParameterState::zeros(p, q, n, loading_sets, has_variances);
  const std::size_t nl = loading_sets * p * q;
  std::copy_n(loadings.begin() + static_cast<std::ptrdiff_t>(s * nl), nl, st.loadings.begin());
  if (has_variances)
    std::copy_n(variances.begin() + static_cast<std::ptrdiff_t>(s * p), p,
                st.variances.begin());
  std::copy_n(factors.begin() + static_cast<std::ptrdiff_t>(s * q * n), q * n,
              st.factors.begin());
  return st;
}

std::size_t PosteriorSample::total_draws() const {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.count;
  return total;
}

double log_prior_loadings_row(std::size_t j, std::span<const double> row,
                              const PriorConfig& prior) {
  double lp = 0.0;
  for (std::size_t l = 0; l < row.size(); ++l) {
    const double b = row[l];
    if (l > j) {
      if (b != 0.0) return -INFINITY;
      continue;
    }
    if (l == j) {
      if (!(b > 0.0)) return -INFINITY;
      lp += kLog2;
    }
    lp += log_normal_pdf(b, 0.0, prior.c0);
  }
  return lp;
}

double log_conditional_loadings_row(std::size_t j, const ParameterState& state,
                                    const CategoricalDataset& data, const ModelSpec& spec,
                                    std::size_t set) {
  check_inputs(data, spec, state);
  if (j >= state.p || set >= state.loading_sets)
    throw DimensionError("log_conditional_loadings_row: index out of range");
  const double prior = log_prior_loadings_row(j, state.beta_row(j, set), spec.prior);
  if (prior == -INFINITY) return -INFINITY;
  return column_data_term(j, state, data, spec) + prior;
}

double log_conditional_variance(std::size_t j, const ParameterState& state,
                                const CategoricalDataset& data, const ModelSpec& spec) {
  if (!is_ordinal(spec.kind))
    throw ValidationError("log_conditional_variance: nominal models have no variances");
  check_inputs(data, spec, state);
  if (j >= state.p) throw DimensionError("log_conditional_variance: index out of range");
  const double v = state.variances[j];
  if (!(v > 0.0)) return -INFINITY;
  return column_data_term(j, state, data, spec) +
         log_inverse_gamma_pdf(v, spec.prior.ig_shape(), spec.prior.ig_scale());
}

double log_conditional_factor(std::size_t i, const ParameterState& state,
                              const CategoricalDataset& data, const ModelSpec& spec) {
  check_inputs(data, spec, state);
  if (i >= state.n) throw DimensionError("log_conditional_factor: index out of range");
  double ff = 0.0;
  for (std::size_t l = 0; l < state.q; ++l) ff += state.factor(l, i) * state.factor(l, i);
  return unit_data_term(i, state, data, spec) - 0.5 * ff;
}

bool mh_block_step(const Block& block, ParameterState& state,
                   const CategoricalDataset& data, const ModelSpec& spec,
                   const StepSizes& steps, Rng& rng) {
  check_inputs(data, spec, state);
  switch (block.kind) {
    case BlockKind::loadings_row:
    case BlockKind::nominal_loadings_row: {
      const std::size_t j = block.index;
      const std::size_t set = spec.shared_loadings ? 0 : block.set;
      if (j >= state.p || set >= state.loading_sets)
        throw DimensionError("mh_block_step: loadings block out of range");
      const std::size_t step_index = spec.shared_loadings ? j : set * state.p + j;
      const double h = steps.loadings.at(step_index);
      const double before = log_conditional_loadings_row(j, state, data, spec, set);
      const std::vector<double> saved(state.loadings);
      std::vector<double> row(state.beta_row(j, set).begin(), state.beta_row(j, set).end());
      for (std::size_t l = 0; l < free_in_row(j, state.q); ++l) row[l] += h * rng.normal();
      const std::size_t first = spec.shared_loadings ? 0 : set;
      const std::size_t last = spec.shared_loadings ? state.loading_sets : set + 1;
      for (std::size_t s = first; s < last; ++s)
        std::copy(row.begin(), row.end(), state.beta_row(j, s).begin());
      if (log_prior_loadings_row(j, row, spec.prior) == -INFINITY) {
        rng.uniform_open();
        state.loadings = saved;
        return false;
      }
      const double after = log_conditional_loadings_row(j, state, data, spec, set);
      if (accept(after - before, rng)) return true;
      state.loadings = saved;
      return false;
    }
    case BlockKind::variance: {
      const std::size_t j = block.index;
      if (!is_ordinal(spec.kind) || j >= state.p)
        throw DimensionError("mh_block_step: variance block out of range");
      const double old_var = state.variances[j];
      const double before = log_conditional_variance(j, state, data, spec);
      const double log_old = std::log(old_var);
      const double log_new = log_old + steps.variances.at(j) * rng.normal();
      const double new_var = std::exp(log_new);
      if (!(new_var > 0.0) || !std::isfinite(new_var)) {
        rng.uniform_open();
        return false;
      }
      state.variances[j] = new_var;
      const double after = log_conditional_variance(j, state, data, spec);
      if (accept(after + log_new - before - log_old, rng)) return true;
      state.variances[j] = old_var;
      return false;
    }
    case BlockKind::factor: {
      const std::size_t i = block.index;
      if (i >= state.n) throw DimensionError("mh_block_step: factor block out of range");
      const double h = steps.factors.at(i);
      const double before = log_conditional_factor(i, state, data, spec);
      std::vector<double> saved(state.q);
      for (std::size_t l = 0; l < state.q; ++l) {
        saved[l] = state.factor(l, i);
        state.factor(l, i) += h * rng.normal();
      }
      const double after = log_conditional_factor(i, state, data, spec);
      if (accept(after - before, rng)) return true;
      for (std::size_t l = 0; l < state.q; ++l) state.factor(l, i) = saved[l];
      return false;
    }
  }
  return false;
}

ParameterState initial_state(const CategoricalDataset& data, const ModelSpec& spec,
                             std::size_t chain_index, Rng& rng) {
  const std::size_t sets = set_count(data, spec);
  ParameterState s = ParameterState::zeros(data.p(), spec.q, data.n(), sets,
                                           is_ordinal(spec.kind));
  const double diag = 1.0 + 0.5 * static_cast<double>(chain_index);
  for (std::size_t set = 0; set < sets; ++set)
    for (std::size_t l = 0; l < std::min(spec.q, data.p()); ++l) s.beta(l, l, set) = diag;
  const double jitter = std::sqrt(0.1);
  for (double& f : s.factors) f = jitter * rng.normal();
  return s;
}

ChainDraws run_chain(const CategoricalDataset& data, const ModelSpec& spec,
                     const McmcConfig& config, std::uint64_t chain_seed,
                     std::size_t chain_index) {
  check_run_config(config);
  spec.validate();
  spec.validate_for(data);

  Rng rng(chain_seed);
  ParameterState init = initial_state(data, spec, chain_index, rng);
  const std::size_t p = data.p(), n = data.n(), q = spec.q;
  const std::size_t sets = init.loading_sets;
  const bool ordinal = is_ordinal(spec.kind);
  const bool shared = !ordinal && spec.shared_loadings;

  const StepSizes start = StepSizes::defaults(init, shared);
  Adapter load_ad(start.loadings), var_ad(start.variances), fac_ad(start.factors);
  ChainEngine engine(data, spec, std::move(init));

  ChainDraws out;
  out.seed = chain_seed;
  out.p = p;
  out.q = q;
  out.n = n;
  out.loading_sets = sets;
  out.has_variances = ordinal;
  const std::size_t keep = config.retained_per_chain();
  out.loadings.reserve(keep * sets * p * q);
  if (ordinal) out.variances.reserve(keep * p);
  out.factors.reserve(keep * q * n);
  out.pointwise.resize(keep * n);
  out.log_lik.reserve(keep);

  const std::size_t adapt_end =
      config.adapt_window == 0 ? config.burn_in : std::min(config.adapt_window, config.burn_in);
  const double target = config.target_acceptance;
  const std::size_t load_blocks = shared ? 1 : sets;

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const bool adapting = t <= adapt_end;
    const bool counting = t > config.burn_in;
    const double gain = adapting ? std::pow(static_cast<double>(t), -0.6) : 0.0;

    for (std::size_t set = 0; set < load_blocks; ++set) {
      for (std::size_t j = 0; j < p; ++j) {
        const std::size_t b = shared ? j : set * p + j;
        const bool ok = engine.step_loadings(j, set, load_ad.step(b), rng);
        load_ad.record(b, ok, adapting, gain, target, counting);
      }
    }
    if (ordinal) {
      for (std::size_t j = 0; j < p; ++j) {
        const bool ok = engine.step_variance(j, var_ad.step(j), rng);
        var_ad.record(j, ok, adapting, gain, target, counting);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = engine.step_factor(i, fac_ad.step(i), rng);
      fac_ad.record(i, ok, adapting, gain, target, counting);
    }

    if (counting && (t - config.burn_in) % config.thin == 0) {
      const ParameterState& st = engine.state();
      out.loadings.insert(out.loadings.end(), st.loadings.begin(), st.loadings.end());
      if (ordinal)
        out.variances.insert(out.variances.end(), st.variances.begin(), st.variances.end());
      out.factors.insert(out.factors.end(), st.factors.begin(), st.factors.end());
      double* pw = out.pointwise.data() + out.count * n;
      engine.pointwise(pw);
      double ll = 0.0;
      for (std::size_t i = 0; i < n; ++i) ll += pw[i];
      out.log_lik.push_back(ll);
      ++out.count;
    }
  }

  out.acceptance.loadings = load_ad.rates();
  out.acceptance.variances = var_ad.rates();
  out.acceptance.factors = fac_ad.rates();
  out.steps.loadings = load_ad.steps();
  out.steps.variances = var_ad.steps();
  out.steps.factors = fac_ad.steps();
  return out;
}

PosteriorSample run_chains(const CategoricalDataset& data, const ModelSpec& spec,
                           const McmcConfig& config) {
  config.validate();
  spec.validate();
  spec.validate_for(data);

  PosteriorSample sample;
  sample.spec = spec;
  sample.config = config;
  sample.n = data.n();
  sample.p = data.p();
  sample.chains.resize(config.n_chains);

  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, config.n_chains);
  auto run_one = [&](std::size_t c) {
    sample.chains[c] = run_chain(data, spec, config, derive_seed(config.seed, c), c);
  };
  if (workers == 1) {
    for (std::size_t c = 0; c < config.n_chains; ++c) run_one(c);
    return sample;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(config.n_chains);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < config.n_chains; c = next++) {
        try {
          run_one(c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return sample;
}

}  // namespace polyfa
