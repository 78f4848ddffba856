#include "polyfa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace polyfa {
namespace {

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

IntervalEstimate interval_of(std::span<const double> x) {
  return {mean_of(x), quantile(x, 0.025), quantile(x, 0.975)};
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double psrf(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw ValidationError("psrf: at least two chains are required");
  const std::size_t n = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != n) throw DimensionError("psrf: chains must have equal length");
  if (n < 10) throw ValidationError("psrf: chains must hold at least 10 draws");

  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c]);
    w += sample_variance(chains[c]);
  }
  w /= static_cast<double>(m);
  const double b_over_n = sample_variance(means);
  if (w == 0.0) return b_over_n == 0.0 ? 1.0 : INFINITY;
  const double mf = static_cast<double>(m);
  return std::sqrt((w + (1.0 + 1.0 / mf) * b_over_n) / w);
}

double effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 10) throw ValidationError("effective_sample_size: at least 10 draws required");
  const double mu = mean_of(draws);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (draws[t] - mu) * (draws[t + lag] - mu);
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  const double nd = static_cast<double>(n);
  if (!(g0 > 0.0)) return nd;

  double tau = -1.0;
  double prev = INFINITY;
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    double pair = (autocov(k) + autocov(k + 1)) / g0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    tau += 2.0 * pair;
    prev = pair;
  }
  tau = std::max(tau, 1.0 / nd);
  return std::min(nd / tau, nd);
}

double bimodality_coefficient(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 4) throw ValidationError("bimodality_coefficient: at least 4 draws required");
  const double mu = mean_of(draws);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : draws) {
    const double d = v - mu;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double nd = static_cast<double>(n);
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  if (!(m2 > 0.0)) return NAN;
  const double g1 = m3 / std::pow(m2, 1.5);
  const double g2 = m4 / (m2 * m2) - 3.0;
  const double skew = g1 * std::sqrt(nd * (nd - 1.0)) / (nd - 2.0);
  const double kurt = (nd - 1.0) / ((nd - 2.0) * (nd - 3.0)) * ((nd + 1.0) * g2 + 6.0);
  return (skew * skew + 1.0) /
         (kurt + 3.0 * (nd - 1.0) * (nd - 1.0) / ((nd - 2.0) * (nd - 3.0)));
}

bool bimodality_flag(std::span<const double> draws) {
  if (draws.size() < 100) throw ValidationError("bimodality_flag: at least 100 draws required");
  const double b = bimodality_coefficient(draws);
  return !std::isnan(b) && b > 5.0 / 9.0;
}

double quantile(std::span<const double> draws, double prob) {
  if (draws.empty()) throw ValidationError("quantile: empty input");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ValidationError("quantile: prob outside [0, 1]");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> ParameterTrace::pooled() const {
  std::vector<double> out;
  for (const auto& c : chains) out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::vector<ParameterTrace> parameter_traces(const PosteriorSample& sample,
                                             bool include_factors) {
  std::vector<ParameterTrace> traces;
  if (sample.chains.empty()) return traces;
  const ChainDraws& first = sample.chains[0];
  const std::size_t p = first.p, q = first.q, n = first.n, sets = first.loading_sets;
  const bool nominal = !is_ordinal(sample.spec.kind);
  const bool shared = nominal && sample.spec.shared_loadings;

  auto collect = [&](std::string name, auto&& get) {
    ParameterTrace t;
    t.name = std::move(name);
    for (const auto& c : sample.chains) {
      std::vector<double> v(c.count);
      for (std::size_t s = 0; s < c.count; ++s) v[s] = get(c, s);
      t.chains.push_back(std::move(v));
    }
    traces.push_back(std::move(t));
  };

  const std::size_t used_sets = shared ? 1 : sets;
  for (std::size_t set = 0; set < used_sets; ++set) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t l = 0; l < std::min(j + 1, q); ++l) {
        std::string name = "beta_" + std::to_string(j + 1) + "_" + std::to_string(l + 1);
        if (nominal && !shared) name += "_" + std::to_string(set + 2);
        collect(name, [=](const ChainDraws& c, std::size_t s) { return c.beta(s, j, l, set); });
      }
    }
  }
  if (first.has_variances)
    for (std::size_t j = 0; j < p; ++j)
      collect("sigma2_" + std::to_string(j + 1),
              [=](const ChainDraws& c, std::size_t s) { return c.variance(s, j); });
  if (include_factors)
    for (std::size_t l = 0; l < q; ++l)
      for (std::size_t i = 0; i < n; ++i)
        collect("f_" + std::to_string(l + 1) + "_" + std::to_string(i + 1),
                [=](const ChainDraws& c, std::size_t s) { return c.factor(s, l, i); });
  return traces;
}

SummaryRow summarize_trace(const ParameterTrace& trace) {
  SummaryRow row;
  row.name = trace.name;
  const auto pooled = trace.pooled();
  if (pooled.empty()) return row;
  const auto iv = interval_of(pooled);
  row.mean = iv.estimate;
  row.lower = iv.lower;
  row.upper = iv.upper;
  row.ess = 0.0;
  bool lengths_ok = true;
  for (const auto& c : trace.chains) {
    if (c.size() < 10) {
      lengths_ok = false;
      continue;
    }
    row.ess += effective_sample_size(c);
  }
  row.psrf = lengths_ok && trace.chains.size() >= 2 ? psrf(trace.chains) : NAN;
  row.bimodal = pooled.size() >= 100 && bimodality_flag(pooled);
  return row;
}

std::vector<SummaryRow> summarize(const PosteriorSample& sample, bool include_factors) {
  std::vector<SummaryRow> rows;
  for (const auto& t : parameter_traces(sample, include_factors))
    rows.push_back(summarize_trace(t));
  return rows;
}

double max_psrf(const std::vector<SummaryRow>& rows) {
  double worst = 1.0;
  for (const auto& r : rows)
    if (!std::isnan(r.psrf)) worst = std::max(worst, r.psrf);
  return worst;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "parameter,mean,q2.5,q97.5,ess,psrf,bimodal\n";
  for (const auto& r : rows)
    out << r.name << ',' << fmt(r.mean) << ',' << fmt(r.lower) << ',' << fmt(r.upper) << ','
        << fmt(r.ess) << ',' << fmt(r.psrf) << ',' << (r.bimodal ? 1 : 0) << '\n';
}

MonteCarloMetrics monte_carlo_metrics(double true_value,
                                      std::span<const IntervalEstimate> replicates) {
  if (replicates.empty()) throw ValidationError("monte_carlo_metrics: no replicates");
  double se = 0.0, ae = 0.0;
  std::size_t covered = 0;
  for (const auto& r : replicates) {
    const double d = r.estimate - true_value;
    se += d * d;
    ae += std::abs(d);
    if (r.lower <= true_value && true_value <= r.upper) ++covered;
  }
  const double k = static_cast<double>(replicates.size());
  return {std::sqrt(se / k), ae / k, 100.0 * static_cast<double>(covered) / k};
}

double variance_decomposition(std::span<const double> beta_row, double sigma2) {
  double b2 = 0.0;
  for (double b : beta_row) b2 += b * b;
  const double total = b2 + sigma2;
  return total > 0.0 ? 100.0 * b2 / total : 0.0;
}

std::vector<double> variance_decomposition_by_factor(std::span<const double> beta_row,
                                                     double sigma2) {
  double b2 = 0.0;
  for (double b : beta_row) b2 += b * b;
  const double total = b2 + sigma2;
  std::vector<double> out(beta_row.size(), 0.0);
  if (total > 0.0)
    for (std::size_t l = 0; l < beta_row.size(); ++l)
      out[l] = 100.0 * beta_row[l] * beta_row[l] / total;
  return out;
}

std::vector<DvSummary> variance_decomposition_summary(const PosteriorSample& sample,
                                                      const std::vector<std::string>& names) {
  if (!is_ordinal(sample.spec.kind))
    throw ValidationError("variance decomposition is undefined for nominal models");
  std::vector<DvSummary> out;
  if (sample.chains.empty()) return out;
  const std::size_t p = sample.chains[0].p, q = sample.chains[0].q;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> total;
    std::vector<std::vector<double>> parts(q);
    std::vector<double> row(q);
    for (const auto& c : sample.chains) {
      for (std::size_t s = 0; s < c.count; ++s) {
        for (std::size_t l = 0; l < q; ++l) row[l] = c.beta(s, j, l);
        total.push_back(variance_decomposition(row, c.variance(s, j)));
        const auto split = variance_decomposition_by_factor(row, c.variance(s, j));
        for (std::size_t l = 0; l < q; ++l) parts[l].push_back(split[l]);
      }
    }
    DvSummary d;
    d.variable = j < names.size() ? names[j] : "v" + std::to_string(j + 1);
    if (!total.empty()) {
      d.total = interval_of(total);
      for (std::size_t l = 0; l < q; ++l) d.by_factor.push_back(interval_of(parts[l]));
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_dv_csv(std::ostream& out, const std::vector<DvSummary>& rows) {
  const std::size_t q = rows.empty() ? 0 : rows[0].by_factor.size();
  out << "variable,dv_mean,dv_q2.5,dv_q97.5";
  for (std::size_t l = 1; l <= q; ++l)
    out << ",f" << l << "_mean,f" << l << "_q2.5,f" << l << "_q97.5";
  out << '\n';
  for (const auto& r : rows) {
    out << r.variable << ',' << fmt(r.total.estimate) << ',' << fmt(r.total.lower) << ','
        << fmt(r.total.upper);
    for (const auto& f : r.by_factor)
      out << ',' << fmt(f.estimate) << ',' << fmt(f.lower) << ',' << fmt(f.upper);
    out << '\n';
  }
}

std::vector<HistogramBin> histogram(std::span<const double> draws, std::size_t bins) {
  if (bins == 0) throw ValidationError("histogram: bins must be positive");
  std::vector<HistogramBin> out;
  if (draws.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(draws.begin(), draws.end());
  const double lo = *lo_it, hi = *hi_it;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  out.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lower = lo + width * static_cast<double>(b);
    out[b].upper = b + 1 == bins ? std::max(hi, lo + width) : lo + width * static_cast<double>(b + 1);
  }
  for (double v : draws) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

}  // namespace polyfa
