#include "polyfa/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "json.hpp"
#include "polyfa/diagnostics.hpp"

namespace polyfa {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

template <typename Get>
std::optional<std::size_t> best_q(const std::vector<CriteriaRow>& rows, Get get) {
  for (const auto& r : rows)
    if (get(r)) return r.q;
  return std::nullopt;
}

}  // namespace

double aic(double max_log_lik, std::size_t m) {
  return -2.0 * max_log_lik + 2.0 * static_cast<double>(m);
}

double bic(double max_log_lik, std::size_t m, std::size_t n) {
  if (n == 0) throw ValidationError("bic: n must be positive");
  return -2.0 * max_log_lik + static_cast<double>(m) * std::log(static_cast<double>(n));
}

WaicResult waic(std::span<const double> pointwise, std::size_t draws, std::size_t units) {
  if (draws < 2) throw ValidationError("waic: at least two draws are required");
  if (units == 0) throw ValidationError("waic: at least one unit is required");
  if (pointwise.size() != draws * units)
    throw DimensionError("waic: pointwise matrix must be draws x units");
  const double s = static_cast<double>(draws);
  WaicResult r;
  std::vector<double> column(draws);
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t d = 0; d < draws; ++d) column[d] = pointwise[d * units + i];
    r.lppd += log_sum_exp(column) - std::log(s);
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= s;
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    r.p_waic += var / (s - 1.0);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

WaicResult waic(const PosteriorSample& sample) {
  std::vector<double> pooled;
  std::size_t draws = 0;
  for (const auto& c : sample.chains) {
    pooled.insert(pooled.end(), c.pointwise.begin(), c.pointwise.end());
    draws += c.count;
  }
  return waic(pooled, draws, sample.n);
}

std::size_t criteria_parameter_count(ModelKind kind, std::size_t p, std::size_t q,
                                     std::size_t loading_sets, bool shared) {
  if (is_ordinal(kind)) return count_free_parameters(p, q);
  const std::size_t per_set = free_loadings(p, q);
  return shared ? per_set : loading_sets * per_set;
}

PlugIn best_draw(const PosteriorSample& sample) {
  PlugIn best;
  for (std::size_t c = 0; c < sample.chains.size(); ++c) {
    const auto& ll = sample.chains[c].log_lik;
    for (std::size_t s = 0; s < ll.size(); ++s) {
      if (ll[s] > best.log_lik) best = {ll[s], c, s};
    }
  }
  return best;
}

CriteriaRow criteria_row(const PosteriorSample& sample, const CategoricalDataset& data,
                         const CriteriaOptions& options) {
  CriteriaRow row;
  row.q = sample.spec.q;
  const std::size_t n = data.n();
  const std::size_t sets = sample.chains.empty() ? 1 : sample.chains[0].loading_sets;
  row.m = criteria_parameter_count(sample.spec.kind, sample.p, sample.spec.q, sets,
                                   sample.spec.shared_loadings);
  row.max_log_lik_conditional = best_draw(sample).log_lik;
  row.waic_conditional = waic(sample).waic;

  std::vector<std::pair<std::size_t, std::size_t>> index;
  for (std::size_t c = 0; c < sample.chains.size(); ++c)
    for (std::size_t s = 0; s < sample.chains[c].count; ++s) index.emplace_back(c, s);
  const std::size_t total = index.size();
  const std::size_t used = std::min(total, std::max<std::size_t>(options.max_draws, 2));
  const auto marginal = MarginalLikelihood::from_sample(data, sample, options.nodes);
  std::vector<double> pointwise;
  pointwise.reserve(used * n);
  row.max_log_lik = -INFINITY;
  for (std::size_t k = 0; k < used; ++k) {
    const auto [c, s] = index[k * total / used];
    const auto ll = marginal.pointwise(sample.chains[c].state(s));
    double sum = 0.0;
    for (double v : ll) sum += v;
    row.max_log_lik = std::max(row.max_log_lik, sum);
    pointwise.insert(pointwise.end(), ll.begin(), ll.end());
  }
  row.aic = aic(row.max_log_lik, row.m);
  row.bic = bic(row.max_log_lik, row.m, n);
  const auto w = waic(pointwise, used, n);
  row.waic = w.waic;
  row.lppd = w.lppd;
  row.p_waic = w.p_waic;

  const auto summary = summarize(sample, false);
  row.max_psrf = max_psrf(summary);
  for (const auto& s : summary)
    if (s.bimodal) row.bimodal.push_back(s.name);
  return row;
}

void CriteriaReport::mark_best() {
  auto mark = [&](auto value, auto flag) {
    CriteriaRow* best = nullptr;
    for (auto& r : rows) {
      (r.*flag) = false;
      if (r.error || std::isnan(r.*value)) continue;
      if (!best || r.*value < best->*value) best = &r;
    }
    if (best) best->*flag = true;
  };
  mark(&CriteriaRow::aic, &CriteriaRow::best_aic);
  mark(&CriteriaRow::bic, &CriteriaRow::best_bic);
  mark(&CriteriaRow::waic, &CriteriaRow::best_waic);
}

std::optional<std::size_t> CriteriaReport::best_q_aic() const {
  return best_q(rows, [](const CriteriaRow& r) { return r.best_aic; });
}
std::optional<std::size_t> CriteriaReport::best_q_bic() const {
  return best_q(rows, [](const CriteriaRow& r) { return r.best_bic; });
}
std::optional<std::size_t> CriteriaReport::best_q_waic() const {
  return best_q(rows, [](const CriteriaRow& r) { return r.best_waic; });
}

CriteriaReport compare_models(const CategoricalDataset& data,
                              const std::vector<ModelSpec>& specs, const McmcConfig& config,
                              const CriteriaOptions& options) {
  CriteriaReport report;
  report.n = data.n();
  report.p = data.p();
  if (!specs.empty()) report.kind = specs.front().kind;
  for (const auto& spec : specs) {
    try {
      report.rows.push_back(criteria_row(run_chains(data, spec, config), data, options));
    } catch (const std::exception& e) {
      CriteriaRow failed;
      failed.q = spec.q;
      failed.error = e.what();
      report.rows.push_back(std::move(failed));
    }
  }
  report.mark_best();
  return report;
}

void write_criteria_csv(std::ostream& out, const CriteriaReport& report) {
  out << "q,AIC,BIC,WAIC,lppd,pWAIC,m,best_AIC,best_BIC,best_WAIC\n";
  for (const auto& r : report.rows)
    out << r.q << ',' << fmt(r.aic) << ',' << fmt(r.bic) << ',' << fmt(r.waic) << ','
        << fmt(r.lppd) << ',' << fmt(r.p_waic) << ',' << r.m << ',' << (r.best_aic ? 1 : 0)
        << ',' << (r.best_bic ? 1 : 0) << ',' << (r.best_waic ? 1 : 0) << '\n';
}

void write_criteria_json(std::ostream& out, const CriteriaReport& report) {
  nlohmann::json j;
  j["model"] = std::string(to_string(report.kind));
  j["n"] = report.n;
  j["p"] = report.p;
  j["likelihood"] = "factor-integrated (quasi-Monte Carlo importance sampling)";
  j["plug_in"] = "evaluated draw with the largest factor-integrated log-likelihood";
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["q"] = r.q;
    row["AIC"] = number_or_null(r.aic);
    row["BIC"] = number_or_null(r.bic);
    row["WAIC"] = number_or_null(r.waic);
    row["lppd"] = number_or_null(r.lppd);
    row["pWAIC"] = number_or_null(r.p_waic);
    row["m"] = r.m;
    row["max_log_lik"] = number_or_null(r.max_log_lik);
    row["max_log_lik_conditional"] = number_or_null(r.max_log_lik_conditional);
    row["WAIC_conditional"] = number_or_null(r.waic_conditional);
    row["best_AIC"] = r.best_aic;
    row["best_BIC"] = r.best_bic;
    row["best_WAIC"] = r.best_waic;
    row["max_psrf"] = number_or_null(r.max_psrf);
    row["bimodal"] = r.bimodal;
    if (r.error) row["error"] = *r.error;
    rows.push_back(std::move(row));
  }
  out << j.dump(2) << '\n';
}

}  // namespace polyfa
