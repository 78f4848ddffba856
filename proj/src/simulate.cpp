#include "polyfa/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "polyfa/exploratory.hpp"
#include "polyfa/io.hpp"
#include "polyfa/nominal_model.hpp"
#include "polyfa/ordinal_model.hpp"

namespace polyfa {
namespace {

using nlohmann::json;

void check_truth(const ParameterState& truth, bool ordinal) {
  if (truth.p == 0 || truth.q == 0) throw ValidationError("generator: empty loadings");
  if (truth.loadings.size() != truth.loading_sets * truth.p * truth.q)
    throw DimensionError("generator: loadings must be p x q per set");
  if (ordinal) {
    if (truth.variances.size() != truth.p)
      throw DimensionError("generator: one variance per variable is required");
    for (double v : truth.variances)
      if (!(v > 0.0)) throw ValidationError("generator: variances must be positive");
  }
}

void check_quantiles(const std::vector<double>& quantiles) {
  if (quantiles.empty()) throw ValidationError("cutoff_quantiles: at least one is required");
  for (std::size_t k = 0; k < quantiles.size(); ++k) {
    if (!(quantiles[k] > 0.0 && quantiles[k] < 1.0))
      throw ValidationError("cutoff_quantiles: values must lie in (0, 1)");
    if (k > 0 && !(quantiles[k] > quantiles[k - 1]))
      throw ValidationError("cutoff_quantiles: values must be strictly increasing");
  }
}

int categorize(double latent, const std::vector<double>& cutoffs) {
  int k = 1;
  for (double a : cutoffs) {
    if (latent <= a) return k;
    ++k;
  }
  return k;
}

std::string path_join(const std::string& dir, const std::string& file) {
  return dir.empty() ? file : dir + "/" + file;
}

// Study-config parsing -------------------------------------------------------

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ValidationError("study config: " + path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) bad(path.empty() ? key : path + "." + key, "missing key");
  return *it;
}

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::uint64_t as_count(const json& v, const std::string& path, std::uint64_t min_value) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) bad(path, "expected an integer");
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) bad(path, "must be non-negative");
  const auto x = v.get<std::uint64_t>();
  if (x < min_value) bad(path, "must be at least " + std::to_string(min_value));
  return x;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) bad(path, "expected a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad(path, "expected true or false");
  return v.get<bool>();
}

ModelKind as_model(const json& v, const std::string& path) {
  if (!v.is_string()) bad(path, "expected a model name");
  try {
    return parse_model_kind(v.get<std::string>());
  } catch (const std::exception& e) {
    bad(path, e.what());
  }
}

std::vector<double> as_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k)
    out.push_back(as_number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

// p x q matrix given as an array of rows.
std::vector<std::vector<double>> as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) bad(path, "expected a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const std::string at = path + "[" + std::to_string(j) + "]";
    rows.push_back(as_numbers(v[j], at));
    if (rows.back().empty()) bad(at, "empty row");
    if (rows.back().size() != rows.front().size()) bad(at, "rows differ in length");
  }
  return rows;
}

StudyGenerator parse_generator(const json& g) {
  const std::string path = "generator";
  StudyGenerator out;
  out.kind = as_model(require(g, "model", path), join_path(path, "model"));
  out.n = as_count(require(g, "n", path), join_path(path, "n"), 1);
  const json& loadings = require(g, "loadings", path);
  const std::string lpath = join_path(path, "loadings");

  if (is_ordinal(out.kind)) {
    const auto rows = as_matrix(loadings, lpath);
    const std::size_t p = rows.size(), q = rows[0].size();
    out.truth = ParameterState::zeros(p, q, 0, 1, true);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t l = 0; l < q; ++l) out.truth.beta(j, l) = rows[j][l];
    const auto vars = as_numbers(require(g, "variances", path), join_path(path, "variances"));
    if (vars.size() != p) bad(join_path(path, "variances"), "expected one value per variable");
    for (std::size_t j = 0; j < p; ++j) {
      if (!(vars[j] > 0.0))
        bad(join_path(path, "variances") + "[" + std::to_string(j) + "]", "must be positive");
      out.truth.variances[j] = vars[j];
    }
    const std::string qpath = join_path(path, "cutoff_quantiles");
    out.cutoff_quantiles = as_numbers(require(g, "cutoff_quantiles", path), qpath);
    try {
      check_quantiles(out.cutoff_quantiles);
    } catch (const std::exception& e) {
      bad(qpath, e.what());
    }
  } else {
    if (!loadings.is_array() || loadings.empty())
      bad(lpath, "expected one p x q matrix per non-reference category");
    std::vector<std::vector<std::vector<double>>> sets;
    for (std::size_t k = 0; k < loadings.size(); ++k) {
      const std::string at = lpath + "[" + std::to_string(k) + "]";
      sets.push_back(as_matrix(loadings[k], at));
      if (sets.back().size() != sets.front().size() ||
          sets.back()[0].size() != sets.front()[0].size())
        bad(at, "every category needs a matrix of the same shape");
    }
    const std::size_t p = sets[0].size(), q = sets[0][0].size();
    out.truth = ParameterState::zeros(p, q, 0, sets.size(), false);
    for (std::size_t k = 0; k < sets.size(); ++k)
      for (std::size_t j = 0; j < p; ++j)
        for (std::size_t l = 0; l < q; ++l) out.truth.beta(j, l, k) = sets[k][j][l];
  }
  return out;
}

StudyFit parse_fit(const json& f, const StudyGenerator& gen) {
  const std::string path = "fit";
  StudyFit out;
  out.kind = f.contains("model") ? as_model(f["model"], join_path(path, "model")) : gen.kind;
  if (is_ordinal(out.kind) != is_ordinal(gen.kind))
    bad(join_path(path, "model"), "must belong to the generator's model family");

  const json& q = require(f, "q", path);
  const std::string qpath = join_path(path, "q");
  if (q.is_array()) {
    if (q.empty()) bad(qpath, "expected at least one value");
    for (std::size_t k = 0; k < q.size(); ++k)
      out.q.push_back(as_count(q[k], qpath + "[" + std::to_string(k) + "]", 1));
  } else {
    out.q.push_back(as_count(q, qpath, 1));
  }

  auto count_or = [&](const char* key, std::size_t fallback, std::uint64_t min_value) {
    return f.contains(key) ? as_count(f[key], join_path(path, key), min_value) : fallback;
  };
  out.mcmc.iterations = count_or("iterations", out.mcmc.iterations, 1);
  out.mcmc.burn_in = count_or("burn_in", out.mcmc.burn_in, 0);
  out.mcmc.thin = count_or("thin", out.mcmc.thin, 1);
  out.mcmc.n_chains = count_or("chains", out.mcmc.n_chains, 2);
  if (out.mcmc.burn_in >= out.mcmc.iterations)
    bad(join_path(path, "burn_in"), "must be smaller than iterations");

  if (f.contains("cutoffs")) {
    const json& c = f["cutoffs"];
    const std::string cpath = join_path(path, "cutoffs");
    if (!c.is_string()) bad(cpath, "expected \"true\" or \"estimate\"");
    const auto s = c.get<std::string>();
    if (s == "estimate") out.estimate_cutoffs = true;
    else if (s != "true") bad(cpath, "expected \"true\" or \"estimate\"");
  }
  if (f.contains("prior")) {
    const json& p = f["prior"];
    const std::string ppath = join_path(path, "prior");
    if (!p.is_object()) bad(ppath, "expected an object");
    if (p.contains("c0")) out.prior.c0 = as_number(p["c0"], join_path(ppath, "c0"));
    if (p.contains("nu")) out.prior.nu = as_number(p["nu"], join_path(ppath, "nu"));
    if (p.contains("s2")) out.prior.s2 = as_number(p["s2"], join_path(ppath, "s2"));
    try {
      out.prior.validate();
    } catch (const std::exception& e) {
      bad(ppath, e.what());
    }
  }
  if (f.contains("shared_loadings"))
    out.shared_loadings = as_bool(f["shared_loadings"], join_path(path, "shared_loadings"));
  return out;
}

// Recovery targets ----------------------------------------------------------

struct Target {
  std::string name;
  double truth;
};

std::vector<Target> recovery_targets(const StudyConfig& cfg) {
  const ParameterState& t = cfg.generator.truth;
  const bool ordinal = is_ordinal(cfg.generator.kind);
  const bool shared = !ordinal && cfg.fit.shared_loadings;
  std::vector<Target> out;
  if (cfg.metrics.loadings) {
    const std::size_t sets = shared ? 1 : t.loading_sets;
    for (std::size_t set = 0; set < sets; ++set)
      for (std::size_t j = 0; j < t.p; ++j)
        for (std::size_t l = 0; l < std::min(j + 1, t.q); ++l) {
          std::string name = "beta_" + std::to_string(j + 1) + "_" + std::to_string(l + 1);
          if (!ordinal && !shared) name += "_" + std::to_string(set + 2);
          out.push_back({name, t.beta(j, l, set)});
        }
  }
  if (ordinal && cfg.metrics.variances)
    for (std::size_t j = 0; j < t.p; ++j)
      out.push_back({"sigma2_" + std::to_string(j + 1), t.variances[j]});
  if (ordinal && cfg.metrics.dv)
    for (std::size_t j = 0; j < t.p; ++j)
      out.push_back({"DV_" + std::to_string(j + 1),
                     variance_decomposition(t.beta_row(j), t.variances[j])});
  return out;
}

IntervalEstimate dv_interval(const PosteriorSample& sample, std::size_t j) {
  std::vector<double> values;
  std::vector<double> row(sample.q());
  for (const auto& c : sample.chains)
    for (std::size_t s = 0; s < c.count; ++s) {
      for (std::size_t l = 0; l < row.size(); ++l) row[l] = c.beta(s, j, l);
      values.push_back(variance_decomposition(row, c.variance(s, j)));
    }
  IntervalEstimate iv;
  double sum = 0.0;
  for (double v : values) sum += v;
  iv.estimate = sum / static_cast<double>(values.size());
  iv.lower = quantile(values, 0.025);
  iv.upper = quantile(values, 0.975);
  return iv;
}

GeneratedData generate_for(const StudyGenerator& g, std::uint64_t seed) {
  if (is_ordinal(g.kind))
    return generate_ordinal(g.kind, g.truth, g.cutoff_quantiles, g.n, seed);
  return generate_nominal(g.truth, g.n, seed);
}

ReplicateOutcome run_replicate(const StudyConfig& cfg, const std::vector<Target>& targets,
                               std::size_t r, std::size_t chain_threads) {
  ReplicateOutcome out;
  out.index = r;
  out.data_seed = replicate_data_seed(cfg.seed, r);
  out.fit_seed = replicate_fit_seed(cfg.seed, r);
  try {
    const GeneratedData gen = generate_for(cfg.generator, out.data_seed);
    const bool ordinal = is_ordinal(cfg.fit.kind);
    std::optional<CutoffSet> cutoffs;
    if (ordinal) cutoffs = cfg.fit.estimate_cutoffs ? estimate_cutoffs(gen.data) : gen.cutoffs;

    CriteriaReport report;
    report.n = gen.data.n();
    report.p = gen.data.p();
    report.kind = cfg.fit.kind;
    bool recovered = false;
    for (std::size_t q : cfg.fit.q) {
      ModelSpec spec;
      spec.kind = cfg.fit.kind;
      spec.q = q;
      spec.cutoffs = cutoffs;
      spec.prior = cfg.fit.prior;
      spec.shared_loadings = cfg.fit.shared_loadings;
      McmcConfig mc = cfg.fit.mcmc;
      mc.seed = out.fit_seed;
      mc.threads = chain_threads;
      try {
        const PosteriorSample sample = run_chains(gen.data, spec, mc);
        if (cfg.fit.q.size() > 1) {
          report.rows.push_back(criteria_row(sample, gen.data));
        } else {
          CriteriaRow row;
          row.q = q;
          const auto summary = summarize(sample, false);
          row.max_psrf = max_psrf(summary);
          for (const auto& s : summary)
            if (s.bimodal) row.bimodal.push_back(s.name);
          report.rows.push_back(std::move(row));
        }
        if (!recovered && q == cfg.generator.truth.q) {
          recovered = true;
          out.max_psrf = report.rows.back().max_psrf;
          const auto traces = parameter_traces(sample, cfg.metrics.factors);
          for (const auto& t : targets) {
            if (t.name.rfind("DV_", 0) == 0) {
              out.estimates.push_back(dv_interval(sample, std::stoul(t.name.substr(3)) - 1));
              continue;
            }
            for (const auto& tr : traces)
              if (tr.name == t.name) {
                const auto pooled = tr.pooled();
                double sum = 0.0;
                for (double v : pooled) sum += v;
                out.estimates.push_back({sum / static_cast<double>(pooled.size()),
                                         quantile(pooled, 0.025), quantile(pooled, 0.975)});
                break;
              }
          }
          if (cfg.metrics.factors) {
            double abs_err = 0.0;
            std::size_t covered = 0, total = 0;
            for (const auto& tr : traces) {
              if (tr.name.rfind("f_", 0) != 0) continue;
              const auto under = tr.name.find('_', 2);
              const std::size_t l = std::stoul(tr.name.substr(2, under - 2)) - 1;
              const std::size_t i = std::stoul(tr.name.substr(under + 1)) - 1;
              const double truth = gen.factors[l * gen.data.n() + i];
              const auto pooled = tr.pooled();
              double sum = 0.0;
              for (double v : pooled) sum += v;
              abs_err += std::abs(sum / static_cast<double>(pooled.size()) - truth);
              if (quantile(pooled, 0.025) <= truth && truth <= quantile(pooled, 0.975))
                ++covered;
              ++total;
            }
            if (total > 0) {
              out.factor_mae = abs_err / static_cast<double>(total);
              out.factor_coverage = 100.0 * static_cast<double>(covered) / static_cast<double>(total);
            }
          }
        }
      } catch (const std::exception& e) {
        CriteriaRow failed;
        failed.q = q;
        failed.error = e.what();
        report.rows.push_back(std::move(failed));
      }
    }
    report.mark_best();
    out.criteria = std::move(report.rows);
    if (!recovered && !targets.empty() &&
        std::find(cfg.fit.q.begin(), cfg.fit.q.end(), cfg.generator.truth.q) != cfg.fit.q.end())
      out.error = "fit at the generating q failed";
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

CutoffSet generator_cutoffs(LinkKind link, const ParameterState& truth,
                            const std::vector<double>& quantiles) {
  check_quantiles(quantiles);
  check_truth(truth, true);
  std::vector<std::vector<double>> rows(truth.p);
  for (std::size_t j = 0; j < truth.p; ++j) {
    const auto beta = truth.beta_row(j);
    const double sigma = std::sqrt(truth.variances[j]);
    double b2 = 0.0;
    for (double b : beta) b2 += b * b;
    for (double u : quantiles) {
      if (link == LinkKind::probit) {
        rows[j].push_back(std::sqrt(b2 + sigma * sigma) * normal_quantile(u));
        continue;
      }
      const double scale = std::sqrt(b2 + sigma * sigma * M_PI * M_PI / 3.0);
      auto f = [&](double a) { return marginal_cumulative(link, a, beta, sigma) - u; };
      double lo = -scale, hi = scale;
      while (f(lo) > 0.0) lo *= 2.0;
      while (f(hi) < 0.0) hi *= 2.0;
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(
          f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
      rows[j].push_back(0.5 * (root.first + root.second));
    }
  }
  return CutoffSet(std::move(rows));
}

GeneratedData generate_ordinal(ModelKind kind, const ParameterState& truth,
                               const std::vector<double>& cutoff_quantiles, std::size_t n,
                               std::uint64_t seed, bool keep_latent) {
  if (!is_ordinal(kind)) throw ValidationError("generate_ordinal: model must be ordinal");
  check_truth(truth, true);
  const LinkKind link = link_of(kind);
  const std::size_t p = truth.p, q = truth.q;

  GeneratedData out;
  out.cutoffs = generator_cutoffs(link, truth, cutoff_quantiles);
  Rng rng(seed);
  out.factors.resize(q * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < q; ++l) out.factors[l * n + i] = rng.normal();

  std::vector<int> values(n * p);
  if (keep_latent) out.latent.resize(n * p);
  std::vector<double> sigma(p);
  for (std::size_t j = 0; j < p; ++j) sigma[j] = std::sqrt(truth.variances[j]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double eta = 0.0;
      for (std::size_t l = 0; l < q; ++l) eta += truth.beta(j, l) * out.factors[l * n + i];
      double err;
      if (link == LinkKind::probit) {
        err = sigma[j] * rng.normal();
      } else {
        const double u = rng.uniform_open();
        err = sigma[j] * std::log(u / (1.0 - u));
      }
      const double latent = eta + err;
      if (keep_latent) out.latent[i * p + j] = latent;
      values[i * p + j] = categorize(latent, out.cutoffs->interior(j));
    }
  }
  std::vector<int> cats(p, static_cast<int>(cutoff_quantiles.size()) + 1);
  out.data = CategoricalDataset(n, p, std::move(cats), values);
  return out;
}

GeneratedData generate_nominal(const ParameterState& truth, std::size_t n, std::uint64_t seed) {
  check_truth(truth, false);
  const std::size_t p = truth.p, q = truth.q, m = truth.loading_sets;
  GeneratedData out;
  Rng rng(seed);
  out.factors.resize(q * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < q; ++l) out.factors[l * n + i] = rng.normal();

  std::vector<int> values(n * p);
  std::vector<double> set_rows(m * q);
  std::vector<double> f(q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < q; ++l) f[l] = out.factors[l * n + i];
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < q; ++l) set_rows[k * q + l] = truth.beta(j, l, k);
      const auto probs = category_probs_nominal(set_rows, f);
      const double u = rng.uniform();
      double acc = 0.0;
      int y = static_cast<int>(m) + 1;
      for (std::size_t k = 0; k <= m; ++k) {
        acc += probs[k];
        if (u < acc) {
          y = static_cast<int>(k) + 1;
          break;
        }
      }
      values[i * p + j] = y;
    }
  }
  std::vector<int> cats(p, static_cast<int>(m) + 1);
  out.data = CategoricalDataset(n, p, std::move(cats), values);
  return out;
}

StudyConfig parse_study_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("study config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("(root)", "expected an object");
  StudyConfig cfg;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) bad("name", "expected a string");
    cfg.name = doc["name"].get<std::string>();
  }
  if (doc.contains("seed")) cfg.seed = as_count(doc["seed"], "seed", 0);
  cfg.replicates = as_count(require(doc, "replicates", ""), "replicates", 1);
  if (doc.contains("threads")) cfg.threads = as_count(doc["threads"], "threads", 1);
  cfg.generator = parse_generator(require(doc, "generator", ""));
  cfg.fit = parse_fit(require(doc, "fit", ""), cfg.generator);
  if (!is_ordinal(cfg.fit.kind) && cfg.generator.cutoff_quantiles.empty() &&
      cfg.fit.estimate_cutoffs)
    bad("fit.cutoffs", "nominal models take no cutoffs");
  if (doc.contains("metrics")) {
    const json& m = doc["metrics"];
    if (!m.is_object()) bad("metrics", "expected an object");
    if (m.contains("loadings")) cfg.metrics.loadings = as_bool(m["loadings"], "metrics.loadings");
    if (m.contains("variances"))
      cfg.metrics.variances = as_bool(m["variances"], "metrics.variances");
    if (m.contains("dv")) cfg.metrics.dv = as_bool(m["dv"], "metrics.dv");
    if (m.contains("factors")) cfg.metrics.factors = as_bool(m["factors"], "metrics.factors");
  }
  return cfg;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("study config: cannot read " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_study_config(text.str());
}

std::uint64_t replicate_data_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(r));
}

std::uint64_t replicate_fit_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(r) + 1);
}

StudyReport replicate_study(const StudyConfig& config) {
  if (config.replicates == 0) throw ValidationError("replicates: must be at least 1");
  StudyReport report;
  report.config = config;
  const auto targets = recovery_targets(config);
  for (const auto& t : targets) {
    report.parameter_names.push_back(t.name);
    report.truths.push_back(t.truth);
  }
  report.replicates.resize(config.replicates);

  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, config.replicates);
  const std::size_t chain_threads =
      workers == 1 ? std::max<std::size_t>(1, std::min(config.threads, config.fit.mcmc.n_chains))
                   : 1;
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < config.replicates; r = next++)
      report.replicates[r] = run_replicate(config, targets, r, chain_threads);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  report.selection.assign(3, std::vector<std::size_t>(config.fit.q.size(), 0));
  std::vector<std::vector<IntervalEstimate>> per_param(targets.size());
  for (const auto& rep : report.replicates) {
    if (rep.error) continue;
    ++report.successful;
    if (rep.estimates.size() == targets.size())
      for (std::size_t k = 0; k < targets.size(); ++k) per_param[k].push_back(rep.estimates[k]);
    for (std::size_t k = 0; k < rep.criteria.size(); ++k) {
      const auto& row = rep.criteria[k];
      if (row.best_aic) report.selection[0][k]++;
      if (row.best_bic) report.selection[1][k]++;
      if (row.best_waic) report.selection[2][k]++;
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    ParameterRecovery rec;
    rec.name = targets[k].name;
    rec.truth = targets[k].truth;
    rec.replicates = per_param[k].size();
    if (!per_param[k].empty()) rec.metrics = monte_carlo_metrics(rec.truth, per_param[k]);
    else rec.metrics = {NAN, NAN, NAN};
    report.recovery.push_back(rec);
  }
  return report;
}

void write_recovery_csv(std::ostream& out, const StudyReport& report) {
  out << "parameter,true,RMSE,MAE,coverage,replicates\n";
  for (const auto& r : report.recovery)
    out << r.name << ',' << format_double(r.truth) << ',' << format_double(r.metrics.rmse) << ','
        << format_double(r.metrics.mae) << ',' << format_double(r.metrics.coverage) << ','
        << r.replicates << '\n';
}

void write_selection_csv(std::ostream& out, const StudyReport& report) {
  out << "criterion";
  for (std::size_t q : report.config.fit.q) out << ",q" << q;
  out << '\n';
  static const char* names[] = {"AIC", "BIC", "WAIC"};
  for (std::size_t c = 0; c < report.selection.size(); ++c) {
    out << names[c];
    for (std::size_t count : report.selection[c]) {
      const double pct = report.successful == 0
                             ? 0.0
                             : 100.0 * static_cast<double>(count) /
                                   static_cast<double>(report.successful);
      out << ',' << format_double(pct);
    }
    out << '\n';
  }
}

void write_replicates_csv(std::ostream& out, const StudyReport& report) {
  out << "replicate,data_seed,fit_seed,status,max_psrf,factor_mae,factor_coverage";
  for (std::size_t q : report.config.fit.q) out << ",AIC_q" << q << ",BIC_q" << q << ",WAIC_q" << q;
  out << '\n';
  for (const auto& r : report.replicates) {
    out << r.index + 1 << ',' << r.data_seed << ',' << r.fit_seed << ','
        << (r.error ? "failed" : "ok") << ',' << format_double(r.max_psrf) << ','
        << format_double(r.factor_mae) << ',' << format_double(r.factor_coverage);
    for (std::size_t k = 0; k < report.config.fit.q.size(); ++k) {
      if (k < r.criteria.size())
        out << ',' << format_double(r.criteria[k].aic) << ',' << format_double(r.criteria[k].bic)
            << ',' << format_double(r.criteria[k].waic);
      else
        out << ",nan,nan,nan";
    }
    out << '\n';
  }
}

void write_study_report(const StudyReport& report, const std::string& dir) {
  atomic_write(path_join(dir, "recovery.csv"),
               [&](std::ostream& o) { write_recovery_csv(o, report); });
  atomic_write(path_join(dir, "selection.csv"),
               [&](std::ostream& o) { write_selection_csv(o, report); });
  atomic_write(path_join(dir, "replicates.csv"),
               [&](std::ostream& o) { write_replicates_csv(o, report); });
}

StudyConfig quick_preset(const std::string& name) {
  if (name != "ordinal-q1") throw ValidationError("quick: unknown preset '" + name + "'");
  StudyConfig cfg;
  cfg.name = name;
  cfg.replicates = 1;
  cfg.generator.kind = ModelKind::ordinal_probit;
  cfg.generator.n = 300;
  cfg.generator.truth = ParameterState::zeros(5, 1, 0, 1, true);
  const double beta[] = {0.99, 0.80, 0.90, 0.70, 0.50};
  const double var[] = {0.01, 0.05, 0.10, 0.15, 0.20};
  for (std::size_t j = 0; j < 5; ++j) {
    cfg.generator.truth.beta(j, 0) = beta[j];
    cfg.generator.truth.variances[j] = var[j];
  }
  cfg.generator.cutoff_quantiles = {0.40, 0.75, 0.90};
  cfg.fit.kind = ModelKind::ordinal_probit;
  cfg.fit.q = {1};
  return cfg;
}

}  // namespace polyfa
