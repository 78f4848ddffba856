// End-to-end acceptance checks. Prints one PASS, FAIL or SKIP line per
// criterion; exits non-zero if any criterion fails.
//
//   polyfa_acceptance            run every criterion
//   polyfa_acceptance 1 7 9      run a subset
//
// The lines are also written to acceptance.txt in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "polyfa/comparison.hpp"
#include "polyfa/diagnostics.hpp"
#include "polyfa/exploratory.hpp"
#include "polyfa/nominal_model.hpp"
#include "polyfa/ordinal_model.hpp"
#include "polyfa/simulate.hpp"

namespace fs = std::filesystem;
using namespace polyfa;

namespace {

struct Outcome {
  enum Status { pass, fail, skip } status = fail;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Outcome::pass : Outcome::fail, std::move(detail)};
}

std::size_t worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string study_path(const std::string& name) {
  return (fs::path(POLYFA_SOURCE_DIR) / "studies" / (name + ".json")).string();
}

const std::vector<double> kQuantiles{0.40, 0.75, 0.90};

ParameterState truth_p5(std::size_t q, std::vector<double> loadings) {
  auto t = ParameterState::zeros(5, q, 0, 1, true);
  t.loadings = std::move(loadings);
  t.variances = {0.01, 0.05, 0.10, 0.15, 0.20};
  return t;
}

// Recovery studies are shared between criteria.
std::map<std::string, StudyReport> g_reports;

const StudyReport& study(const std::string& name) {
  auto it = g_reports.find(name);
  if (it != g_reports.end()) return it->second;
  auto cfg = load_study_config(study_path(name));
  cfg.threads = worker_threads();
  return g_reports.emplace(name, replicate_study(cfg)).first->second;
}

Outcome loading_recovery(const std::string& name, double max_rmse) {
  const auto& r = study(name);
  if (r.successful != r.config.replicates)
    return verdict(false, fmt("%zu/%zu replicates succeeded", r.successful,
                              r.config.replicates));
  bool ok = true;
  std::string detail;
  for (const auto& rec : r.recovery) {
    if (rec.name.rfind("beta_", 0) != 0) continue;
    const auto& m = rec.metrics;
    ok = ok && m.rmse <= max_rmse && m.mae <= 0.20 && m.coverage >= 75.0 && m.coverage <= 100.0;
    detail += fmt("%s rmse=%.3f mae=%.3f cov=%.0f%%; ", rec.name.c_str(), m.rmse, m.mae,
                  m.coverage);
  }
  detail += fmt("R=%zu", r.config.replicates);
  return verdict(ok, detail);
}

Outcome criterion1() { return loading_recovery("ordinal_probit_q1", 0.45); }
Outcome criterion2() { return loading_recovery("ordinal_logit_q1", 0.55); }

Outcome criterion3() {
  const auto& rep = study("ordinal_probit_q1").replicates.front();
  if (rep.error) return verdict(false, "replicate failed: " + *rep.error);
  return verdict(rep.factor_mae <= 0.5 && rep.factor_coverage >= 75.0,
                 fmt("replicate 1: factor MAE=%.3f coverage=%.1f%%", rep.factor_mae,
                     rep.factor_coverage));
}

Outcome criterion4() {
  auto cfg = load_study_config(study_path("model_selection_p9_q3"));
  cfg.threads = worker_threads();
  const auto start = std::chrono::steady_clock::now();
  const auto r = replicate_study(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& qs = cfg.fit.q;
  const auto& bic = r.selection.at(1);
  std::size_t at3 = 0, below3 = 0;
  std::string counts;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    if (qs[k] == 3) at3 = bic[k];
    if (qs[k] < 3) below3 += bic[k];
    counts += fmt("q%zu:%zu ", qs[k], bic[k]);
  }
  const bool ok = at3 >= 6 && below3 == 0 && secs <= 7200.0;
  return verdict(ok, fmt("BIC picks %s(R=%zu, %zu ok) in %.0f s", counts.c_str(),
                         cfg.replicates, r.successful, secs));
}

Outcome criterion5() {
  const auto truth = truth_p5(2, {0.99, 0.00, 0.00, 0.99, 0.90, 0.00, 0.00, 0.90, 0.50, 0.50});
  const auto g = generate_ordinal(ModelKind::ordinal_probit, truth, kQuantiles, 300, 20505);
  std::vector<ModelSpec> specs(2);
  for (std::size_t k = 0; k < 2; ++k) {
    specs[k].kind = ModelKind::ordinal_probit;
    specs[k].q = k + 1;
    specs[k].cutoffs = g.cutoffs;
  }
  McmcConfig mc;
  mc.seed = 20506;
  mc.threads = worker_threads();
  const auto report = compare_models(g.data, specs, mc);
  const auto& a = report.rows.at(0);
  const auto& b = report.rows.at(1);
  if (a.error || b.error) return verdict(false, "fit failed");
  const double d_aic = a.aic - b.aic, d_bic = a.bic - b.bic, d_waic = a.waic - b.waic;
  return verdict(d_aic > 100 && d_bic > 100 && d_waic > 100,
                 fmt("q1-q2 margins: AIC %.1f, BIC %.1f, WAIC %.1f", d_aic, d_bic, d_waic));
}

Outcome criterion6() {
  const auto& r = study("ordinal_probit_q1");
  const auto& rep = r.replicates.front();
  if (rep.error) return verdict(false, "replicate failed: " + *rep.error);
  const double truth[] = {99.0, 92.8, 89.0, 76.6, 55.6};
  std::size_t covered = 0;
  std::string detail;
  for (std::size_t j = 0; j < 5; ++j) {
    const auto name = "DV_" + std::to_string(j + 1);
    const auto it = std::find(r.parameter_names.begin(), r.parameter_names.end(), name);
    if (it == r.parameter_names.end()) return verdict(false, name + " not reported");
    const auto& e = rep.estimates[static_cast<std::size_t>(it - r.parameter_names.begin())];
    if (e.lower <= truth[j] && truth[j] <= e.upper) ++covered;
    detail += fmt("%s %.1f (%.1f, %.1f); ", name.c_str(), e.estimate, e.lower, e.upper);
  }
  return verdict(covered >= 4, detail + fmt("%zu/5 cover", covered));
}

Outcome criterion7() {
  double worst_sum = 0.0, worst_scale = 0.0, worst_marginal = 0.0;
  const std::vector<double> cuts{-1.1, -0.2, 0.4, 1.3};
  for (LinkKind link : {LinkKind::probit, LinkKind::logit})
    for (double eta : {-3.0, -0.7, 0.0, 0.5, 2.4})
      for (double sigma : {0.1, 0.6, 1.0, 2.5}) {
        const auto pr = category_probs(link, cuts, eta, sigma, 5);
        double s = 0.0;
        for (double v : pr) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        for (double alpha : cuts)
          for (double c : {0.3, 4.0})
            worst_scale = std::max(worst_scale,
                                   std::abs(cumulative_prob(link, c * alpha, c * eta, c * sigma) -
                                            cumulative_prob(link, alpha, eta, sigma)));
      }
  const std::vector<std::vector<double>> rows{{0.9}, {0.4, -1.2}, {1.5, 0.2, 0.7}};
  for (const auto& row : rows)
    for (double alpha : {-1.5, 0.0, 0.8})
      for (double sigma : {0.2, 1.0})
        worst_marginal = std::max(
            worst_marginal, std::abs(marginal_cumulative_probit(alpha, row, sigma) -
                                     marginal_cumulative(LinkKind::probit, alpha, row, sigma)));

  const auto g = generate_ordinal(ModelKind::ordinal_probit, truth_p5(1, {0.99, 0.8, 0.9, 0.7, 0.5}),
                                  kQuantiles, 200, 707);
  ModelSpec spec;
  spec.cutoffs = g.cutoffs;
  McmcConfig mc;
  mc.iterations = 1500;
  mc.burn_in = 500;
  mc.thin = 5;
  mc.seed = 708;
  const auto sample = run_chains(g.data, spec, mc);
  const auto w = waic(sample);
  const double waic_gap = std::abs(w.waic + 2.0 * (w.lppd - w.p_waic));

  double dv_gap = 0.0;
  const std::vector<double> beta{0.7, -0.4, 1.1};
  for (double s2 : {0.01, 0.3, 2.0}) {
    const auto parts = variance_decomposition_by_factor(beta, s2);
    double s = 0.0;
    for (double v : parts) s += v;
    dv_gap = std::max(dv_gap, std::abs(s - variance_decomposition(beta, s2)));
  }

  const auto rho = polychoric_matrix(g.data);
  double asym = 0.0;
  for (std::size_t a = 0; a < rho.rows; ++a)
    for (std::size_t b = 0; b < rho.cols; ++b) asym = std::max(asym, std::abs(rho(a, b) - rho(b, a)));
  std::vector<int> c1(g.data.n()), c2(g.data.n());
  for (std::size_t i = 0; i < g.data.n(); ++i) {
    c1[i] = g.data.value(i, 0);
    c2[i] = g.data.value(i, 4);
  }
  asym = std::max(asym, std::abs(polychoric_pair(c1, 4, c2, 4) - polychoric_pair(c2, 4, c1, 4)));

  const bool ok = worst_sum <= 1e-12 && worst_scale <= 1e-12 && worst_marginal <= 1e-6 &&
                  waic_gap <= 1e-10 && dv_gap <= 1e-10 && asym <= 1e-6;
  return verdict(ok, fmt("probs sum %.1e, scale %.1e, marginal %.1e, WAIC %.1e, DV %.1e, "
                         "polychoric %.1e",
                         worst_sum, worst_scale, worst_marginal, waic_gap, dv_gap, asym));
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

Outcome criterion8() {
  const std::size_t p = 5, q = 2;
  const auto data = CategoricalDataset::empty(p, std::vector<int>(p, 4));
  ModelSpec spec;
  spec.q = q;
  spec.cutoffs = CutoffSet(std::vector<std::vector<double>>(p, {-0.5, 0.3, 1.2}));
  McmcConfig mc;
  mc.iterations = 410000;
  mc.burn_in = 10000;
  mc.thin = 100;
  mc.seed = 808;
  const auto sample = run_chains(data, spec, mc);

  const PriorConfig& prior = spec.prior;
  std::mt19937_64 eng(809);
  std::gamma_distribution<double> gamma(prior.ig_shape(), 1.0);
  std::vector<double> reference(20000);
  for (double& v : reference) v = prior.ig_scale() / gamma(eng);

  const double c_alpha = std::sqrt(-0.5 * std::log(0.01 / 2.0));
  bool ok = true;
  double worst_ks = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> draws;
    for (const auto& c : sample.chains)
      for (std::size_t s = 0; s < c.count; ++s) draws.push_back(c.variance(s, j));
    const double n1 = static_cast<double>(draws.size()), n2 = reference.size();
    const double d = ks_statistic(draws, reference);
    const double ratio = d / (c_alpha * std::sqrt((n1 + n2) / (n1 * n2)));
    worst_ks = std::max(worst_ks, ratio);
    ok = ok && ratio < 1.0;
  }

  double worst_mean = 0.0, worst_var = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t l = 0; l < std::min(j, q); ++l) {
      std::vector<double> draws;
      for (const auto& c : sample.chains)
        for (std::size_t s = 0; s < c.count; ++s) draws.push_back(c.beta(s, j, l));
      double mean = 0.0, var = 0.0;
      for (double v : draws) mean += v;
      mean /= draws.size();
      for (double v : draws) var += (v - mean) * (v - mean);
      var /= draws.size() - 1;
      const double ess = effective_sample_size(draws);
      const double z = std::abs(mean) / std::sqrt(prior.c0 / ess);
      const double rel = std::abs(var / prior.c0 - 1.0);
      worst_mean = std::max(worst_mean, z);
      worst_var = std::max(worst_var, rel);
      ok = ok && z <= 4.0 && rel <= 0.20;
    }
  return verdict(ok, fmt("max KS/critical %.3f, max |mean|/SE %.2f, max |var/C0 - 1| %.3f, "
                         "%zu draws",
                         worst_ks, worst_mean, worst_var, sample.total_draws()));
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_quiet(const std::vector<std::string>& args) {
  std::string cmd = std::string("\"") + POLYFA_CLI + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion9() {
  const auto root = fs::temp_directory_path() / "polyfa_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::vector<std::string> mismatched;
  std::size_t compared = 0;
  auto same = [&](const std::string& what, const fs::path& a, const fs::path& b) {
    ++compared;
    if (!fs::exists(a) || slurp(a) != slurp(b)) mismatched.push_back(what);
  };

  for (const char* run : {"a", "b"})
    run_quiet({"simulate", "--quick", "ordinal-q1", "--seed", "91", "--out",
               (root / "sim" / run).string()});
  for (const char* f : {"data.csv", "cutoffs.csv", "factors.csv"})
    same(std::string("simulate ") + f, root / "sim" / "a" / f, root / "sim" / "b" / f);

  const auto data = (root / "sim" / "a" / "data.csv").string();
  for (const char* model : {"ordinal-probit", "ordinal-logit", "nominal"})
    for (const char* run : {"a", "b"}) {
      const int code = run_quiet({"fit", "--data", data, "--model", model, "--q", "1", "--iters",
                                  "1500", "--burnin", "500", "--thin", "5", "--seed", "92",
                                  "--out", (root / model / run).string()});
      if (code != 0 && code != 2) mismatched.push_back(std::string("fit ") + model + " exit");
    }
  for (const char* model : {"ordinal-probit", "ordinal-logit", "nominal"})
    for (const char* f : {"draws.csv", "summary.csv"})
      same(std::string(model) + " " + f, root / model / "a" / f, root / model / "b" / f);

  std::string detail = fmt("%zu files compared", compared);
  for (const auto& m : mismatched) detail += "; differs: " + m;
  fs::remove_all(root);
  return verdict(mismatched.empty(), detail);
}

Outcome criterion10() {
  const double rho = 0.5;
  const double cuts[] = {-0.6, 0.2, 1.0};
  std::size_t hits = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(derive_seed(1010, seed));
    std::vector<int> a(5000), b(5000);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double x = rng.normal();
      const double y = rho * x + std::sqrt(1.0 - rho * rho) * rng.normal();
      a[i] = 1 + static_cast<int>(std::upper_bound(cuts, cuts + 3, x) - cuts);
      b[i] = 1 + static_cast<int>(std::upper_bound(cuts, cuts + 3, y) - cuts);
    }
    const double est = polychoric_pair(a, 4, b, 4);
    if (std::abs(est - rho) <= 0.08) ++hits;
    detail += fmt("%.3f ", est);
  }
  return verdict(hits >= 9, detail + fmt("(%zu/10 within 0.08)", hits));
}

std::optional<std::string> msq_path() {
  if (const char* env = std::getenv("POLYFA_MSQ_CSV")) return std::string(env);
  const auto local = fs::path(POLYFA_SOURCE_DIR) / "data" / "msq10.csv";
  if (fs::exists(local)) return local.string();
  return std::nullopt;
}

Outcome criterion11() {
  const auto path = msq_path();
  if (!path || !fs::exists(*path))
    return {Outcome::skip, "MSQ data not found (set POLYFA_MSQ_CSV or add data/msq10.csv)"};
  const auto data = load_dataset_file(*path);
  if (data.p() != 10) return verdict(false, fmt("expected 10 items, found %zu", data.p()));

  ModelSpec spec;
  spec.cutoffs = estimate_cutoffs(data);
  McmcConfig mc;
  mc.seed = 1111;
  mc.threads = worker_threads();
  spec.q = 2;
  const auto two = run_chains(data, spec, mc);
  const auto rows = summarize(two, false);
  auto row = [&](const std::string& name) -> const SummaryRow& {
    return *std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.name == name; });
  };
  bool signs = true;
  for (std::size_t j = 1; j <= 10; ++j) signs = signs && row(fmt("beta_%zu_1", j)).mean > 0.0;
  for (std::size_t j = 6; j <= 10; ++j) signs = signs && row(fmt("beta_%zu_2", j)).mean < 0.0;
  const auto& b32 = row("beta_3_2");
  const auto& b52 = row("beta_5_2");
  const bool zeros = b32.lower <= 0.0 && b32.upper >= 0.0 && b52.lower <= 0.0 && b52.upper >= 0.0;

  spec.q = 3;
  const auto three = run_chains(data, spec, mc);
  std::size_t flagged = 0;
  for (const auto& r : summarize(three, false)) flagged += r.bimodal;
  return verdict(signs && zeros && flagged > 0,
                 fmt("sign pattern %s, beta_3_2/beta_5_2 intervals cover 0: %s, q=3 bimodal "
                     "flags: %zu",
                     signs ? "ok" : "wrong", zeros ? "yes" : "no", flagged));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11};
  std::set<std::size_t> selected;
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "usage: polyfa_acceptance [criterion numbers 1-" << criteria.size() << "]\n";
      return 1;
    }
    selected.insert(static_cast<std::size_t>(k));
  }
  if (selected.empty())
    for (std::size_t k = 1; k <= criteria.size(); ++k) selected.insert(k);

  std::ofstream log("acceptance.txt");
  bool failed = false;
  for (std::size_t k : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
    failed = failed || o.status == Outcome::fail;
    const std::string line =
        "criterion " + std::to_string(k) + ": " + tag + "  " + o.detail + fmt("  [%.0f s]", secs);
    std::cout << line << std::endl;
    log << line << std::endl;
  }
  return failed ? 1 : 0;
}
