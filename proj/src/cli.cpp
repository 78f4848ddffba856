#include "polyfa/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyfa/comparison.hpp"
#include "polyfa/diagnostics.hpp"
#include "polyfa/exploratory.hpp"
#include "polyfa/io.hpp"
#include "polyfa/kernels.hpp"
#include "polyfa/simulate.hpp"

namespace polyfa {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr double kPsrfLimit = 1.1;

struct CommonArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct FitArgs {
  std::string data;
  std::string model;
  std::size_t q = 1;
  std::string cutoffs = "estimate";
  std::size_t iters = 10000, burnin = 1000, thin = 9, chains = 2;
  double c0 = 100.0, nu = 0.02, s2 = 1.0;
  bool shared = false;
};

std::string output_dir(const CommonArgs& args) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("POLYFA_OUT_DIR"); env && *env) return env;
  return "polyfa_out";
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::uint64_t required_seed(const CLI::Option* opt, const CommonArgs& args) {
  if (opt->count() == 0)
    throw ValidationError("--seed: required so that every run is reproducible");
  return args.seed;
}

void add_common(CLI::App* sub, CommonArgs& args, CLI::Option*& seed_opt) {
  sub->add_option("--out", args.out_dir, "Output directory (env POLYFA_OUT_DIR)");
  seed_opt = sub->add_option("--seed", args.seed, "Master random seed");
  sub->add_option("--threads", args.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_fit_options(CLI::App* sub, FitArgs& a, bool with_q) {
  sub->add_option("--data", a.data, "Dataset CSV")->required();
  sub->add_option("--model", a.model, "ordinal-probit | ordinal-logit | nominal")->required();
  if (with_q) sub->add_option("--q", a.q, "Number of factors")->required();
  sub->add_option("--cutoffs", a.cutoffs, "estimate | file:<path>");
  sub->add_option("--iters", a.iters, "MCMC iterations");
  sub->add_option("--burnin", a.burnin, "Burn-in iterations");
  sub->add_option("--thin", a.thin, "Thinning interval");
  sub->add_option("--chains", a.chains, "Number of chains");
  sub->add_option("--c0", a.c0, "Loading prior variance");
  sub->add_option("--nu", a.nu, "Inverse-gamma degrees of freedom");
  sub->add_option("--s2", a.s2, "Inverse-gamma scale");
  sub->add_flag("--shared-loadings", a.shared, "Nominal: one loading matrix for all categories");
}

ModelSpec base_spec(const FitArgs& a, const CategoricalDataset& data) {
  ModelSpec spec;
  try {
    spec.kind = parse_model_kind(a.model);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("--model: ") + e.what());
  }
  spec.prior = {a.c0, a.nu, a.s2};
  spec.shared_loadings = a.shared;
  if (is_ordinal(spec.kind)) {
    if (a.cutoffs == "estimate") {
      spec.cutoffs = estimate_cutoffs(data);
    } else if (a.cutoffs.rfind("file:", 0) == 0) {
      spec.cutoffs = load_cutoffs_file(a.cutoffs.substr(5));
    } else {
      throw ValidationError("--cutoffs: expected 'estimate' or 'file:<path>'");
    }
  } else if (a.cutoffs != "estimate") {
    throw ValidationError("--cutoffs: nominal models take no cutoffs");
  }
  return spec;
}

McmcConfig mcmc_config(const FitArgs& a, const CommonArgs& c) {
  McmcConfig cfg;
  cfg.iterations = a.iters;
  cfg.burn_in = a.burnin;
  cfg.thin = a.thin;
  cfg.n_chains = a.chains;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  cfg.validate();
  return cfg;
}

json manifest_base(const std::string& command, int argc, const char* const* argv,
                   const CommonArgs& c) {
  json m;
  m["command"] = command;
  std::vector<std::string> args(argv, argv + argc);
  m["argv"] = args;
  m["version"] = std::string(kVersion);
  m["kernels"] = std::string(kernels::to_string(kernels::active_isa()));
  m["seed"] = c.seed;
  return m;
}

json config_json(const McmcConfig& cfg) {
  return {{"iterations", cfg.iterations}, {"burn_in", cfg.burn_in}, {"thin", cfg.thin},
          {"chains", cfg.n_chains},       {"seed", cfg.seed},       {"threads", cfg.threads},
          {"target_acceptance", cfg.target_acceptance}};
}

json chains_json(const PosteriorSample& sample) {
  json chains = json::array();
  for (const auto& c : sample.chains) {
    chains.push_back({{"seed", c.seed},
                      {"retained", c.count},
                      {"acceptance",
                       {{"loadings", c.acceptance.mean_loadings()},
                        {"variances", c.acceptance.mean_variances()},
                        {"factors", c.acceptance.mean_factors()}}}});
  }
  return chains;
}

void write_json(const std::string& path, const json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cmd_fit(const FitArgs& a, CommonArgs& c, const CLI::Option* seed_opt, int argc,
            const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  c.seed = required_seed(seed_opt, c);
  const CategoricalDataset data = load_dataset_file(a.data);
  ModelSpec spec = base_spec(a, data);
  spec.q = a.q;
  spec.validate();
  spec.validate_for(data);
  const McmcConfig cfg = mcmc_config(a, c);

  const PosteriorSample sample = run_chains(data, spec, cfg);
  const auto summary = summarize(sample, true);
  const double worst = max_psrf(summary);
  const std::string dir = output_dir(c);

  atomic_write(join(dir, "draws.csv"), [&](std::ostream& o) { write_draws_csv(o, sample); });
  atomic_write(join(dir, "summary.csv"), [&](std::ostream& o) { write_summary_csv(o, summary); });
  if (is_ordinal(spec.kind)) {
    const auto dv = variance_decomposition_summary(sample, data.names());
    atomic_write(join(dir, "dv.csv"), [&](std::ostream& o) { write_dv_csv(o, dv); });
    atomic_write(join(dir, "cutoffs.csv"),
                 [&](std::ostream& o) { write_cutoffs(o, *spec.cutoffs, data.names()); });
  }

  json m = manifest_base("fit", argc, argv, c);
  m["input"] = {{"path", a.data}, {"fnv1a64", file_checksum(a.data)},
                {"n", data.n()}, {"p", data.p()}};
  m["model"] = std::string(to_string(spec.kind));
  m["q"] = spec.q;
  m["cutoffs"] = a.cutoffs;
  m["prior"] = {{"c0", spec.prior.c0}, {"nu", spec.prior.nu}, {"s2", spec.prior.s2}};
  m["shared_loadings"] = spec.shared_loadings;
  m["mcmc"] = config_json(cfg);
  m["chains"] = chains_json(sample);
  m["max_psrf"] = worst;
  m["wall_time_seconds"] = seconds_since(t0);
  write_json(join(dir, "manifest.json"), m);

  out << "fit: " << sample.total_draws() << " draws written to " << dir << '\n';
  if (worst > kPsrfLimit) {
    err << "warning: max PSRF " << worst << " exceeds " << kPsrfLimit << '\n';
    return 2;
  }
  return 0;
}

std::pair<std::size_t, std::size_t> parse_q_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const std::size_t q = std::stoul(text);
      return {q, q};
    }
    return {std::stoul(text.substr(0, dots)), std::stoul(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ValidationError("--q-range: expected <lo>..<hi>, got '" + text + "'");
  }
}

int cmd_compare(const FitArgs& a, const std::string& q_range, CommonArgs& c,
                const CLI::Option* seed_opt, int argc, const char* const* argv,
                std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  c.seed = required_seed(seed_opt, c);
  const CategoricalDataset data = load_dataset_file(a.data);
  const ModelSpec base = base_spec(a, data);
  auto [lo, hi] = parse_q_range(q_range);
  if (lo == 0 || lo > hi) throw ValidationError("--q-range: need 1 <= lo <= hi");
  const std::size_t bound = max_factors(data.p());
  if (hi > bound) {
    err << "warning: --q-range upper bound " << hi << " clipped to max_factors(p=" << data.p()
        << ") = " << bound << '\n';
    hi = bound;
  }
  if (lo > hi)
    throw ValidationError("--q-range: no admissible q; max_factors(p=" +
                          std::to_string(data.p()) + ") = " + std::to_string(bound));
  const McmcConfig cfg = mcmc_config(a, c);

  std::vector<ModelSpec> specs;
  for (std::size_t q = lo; q <= hi; ++q) {
    ModelSpec s = base;
    s.q = q;
    specs.push_back(s);
  }
  const CriteriaReport report = compare_models(data, specs, cfg);
  const std::string dir = output_dir(c);
  atomic_write(join(dir, "criteria.csv"), [&](std::ostream& o) { write_criteria_csv(o, report); });
  atomic_write(join(dir, "criteria.json"),
               [&](std::ostream& o) { write_criteria_json(o, report); });

  json m = manifest_base("compare", argc, argv, c);
  m["input"] = {{"path", a.data}, {"fnv1a64", file_checksum(a.data)},
                {"n", data.n()}, {"p", data.p()}};
  m["model"] = std::string(to_string(base.kind));
  m["q_range"] = {lo, hi};
  m["mcmc"] = config_json(cfg);
  m["wall_time_seconds"] = seconds_since(t0);
  write_json(join(dir, "manifest.json"), m);

  bool flagged = false;
  for (const auto& r : report.rows) {
    if (r.error) {
      err << "q=" << r.q << ": fit failed: " << *r.error << '\n';
      continue;
    }
    if (!r.bimodal.empty())
      err << "q=" << r.q << ": multimodal posterior for " << r.bimodal.size()
          << " parameter(s)\n";
    if (r.max_psrf > kPsrfLimit) flagged = true;
  }
  out << "compare: criteria for q=" << lo << ".." << hi << " written to " << dir << '\n';
  if (flagged) {
    err << "warning: some fits have PSRF above " << kPsrfLimit << '\n';
    return 2;
  }
  return 0;
}

int cmd_explore(const std::string& data_path, CommonArgs& c, int argc, const char* const* argv,
                std::ostream& out) {
  const CategoricalDataset data = load_dataset_file(data_path);
  const CutoffSet cutoffs = estimate_cutoffs(data);
  const Matrix rho = polychoric_matrix(data);
  const std::string dir = output_dir(c);
  atomic_write(join(dir, "polychoric.csv"),
               [&](std::ostream& o) { write_polychoric_csv(o, rho, data.names()); });
  atomic_write(join(dir, "polychoric_long.csv"),
               [&](std::ostream& o) { write_polychoric_long_csv(o, rho, data.names()); });
  atomic_write(join(dir, "cutoffs.csv"),
               [&](std::ostream& o) { write_cutoffs(o, cutoffs, data.names()); });
  json m = manifest_base("explore", argc, argv, c);
  m.erase("seed");
  m["input"] = {{"path", data_path}, {"fnv1a64", file_checksum(data_path)},
                {"n", data.n()}, {"p", data.p()}};
  write_json(join(dir, "manifest.json"), m);
  out << "explore: polychoric matrix (" << data.p() << " x " << data.p() << ") written to "
      << dir << '\n';
  return 0;
}

void write_factors_csv(std::ostream& o, const GeneratedData& g) {
  const std::size_t n = g.data.n();
  const std::size_t q = n == 0 ? 0 : g.factors.size() / n;
  o << "unit";
  for (std::size_t l = 1; l <= q; ++l) o << ",f" << l;
  o << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    o << i + 1;
    for (std::size_t l = 0; l < q; ++l) o << ',' << format_double(g.factors[l * n + i]);
    o << '\n';
  }
}

int cmd_simulate(const std::string& study, const std::string& quick, CommonArgs& c,
                 const CLI::Option* seed_opt, int argc, const char* const* argv,
                 std::ostream& out) {
  const auto t0 = Clock::now();
  c.seed = required_seed(seed_opt, c);
  if (study.empty() == quick.empty())
    throw ValidationError("simulate: give exactly one of --study or --quick");
  const std::string dir = output_dir(c);
  json m = manifest_base("simulate", argc, argv, c);

  if (!quick.empty()) {
    const StudyConfig cfg = quick_preset(quick);
    const std::uint64_t data_seed = replicate_data_seed(c.seed, 0);
    const GeneratedData g = generate_ordinal(cfg.generator.kind, cfg.generator.truth,
                                             cfg.generator.cutoff_quantiles, cfg.generator.n,
                                             data_seed);
    atomic_write(join(dir, "data.csv"), [&](std::ostream& o) { write_dataset(o, g.data); });
    atomic_write(join(dir, "cutoffs.csv"),
                 [&](std::ostream& o) { write_cutoffs(o, *g.cutoffs, g.data.names()); });
    atomic_write(join(dir, "factors.csv"), [&](std::ostream& o) { write_factors_csv(o, g); });
    m["preset"] = quick;
    m["data_seed"] = data_seed;
    m["n"] = g.data.n();
    m["p"] = g.data.p();
    m["wall_time_seconds"] = seconds_since(t0);
    write_json(join(dir, "manifest.json"), m);
    out << "simulate: " << quick << " dataset (n=" << g.data.n() << ", p=" << g.data.p()
        << ") written to " << dir << '\n';
    return 0;
  }

  StudyConfig cfg = load_study_config(study);
  cfg.seed = c.seed;
  if (c.threads > 1) cfg.threads = c.threads;
  const StudyReport report = replicate_study(cfg);
  write_study_report(report, dir);
  m["study"] = {{"path", study}, {"fnv1a64", file_checksum(study)}, {"name", cfg.name}};
  m["replicates"] = cfg.replicates;
  m["successful"] = report.successful;
  json seeds = json::array();
  for (const auto& r : report.replicates)
    seeds.push_back({{"replicate", r.index + 1}, {"data_seed", r.data_seed},
                     {"fit_seed", r.fit_seed}, {"status", r.error ? *r.error : "ok"}});
  m["replicate_seeds"] = seeds;
  m["wall_time_seconds"] = seconds_since(t0);
  write_json(join(dir, "manifest.json"), m);
  out << "simulate: study '" << cfg.name << "' (" << report.successful << "/" << cfg.replicates
      << " replicates) written to " << dir << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian factor analysis for ordinal and nominal data", "polyfa"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonArgs common;
  FitArgs fit_args;

  auto* fit = app.add_subcommand("fit", "Fit a factor model by MCMC");
  add_fit_options(fit, fit_args, true);
  CLI::Option* fit_seed = nullptr;
  add_common(fit, common, fit_seed);

  FitArgs cmp_args;
  std::string q_range;
  auto* compare = app.add_subcommand("compare", "Compare AIC, BIC and WAIC across q");
  add_fit_options(compare, cmp_args, false);
  compare->add_option("--q-range", q_range, "<lo>..<hi>")->required();
  CLI::Option* cmp_seed = nullptr;
  add_common(compare, common, cmp_seed);

  std::string explore_data;
  auto* explore = app.add_subcommand("explore", "Cutoffs and polychoric correlations");
  explore->add_option("--data", explore_data, "Dataset CSV")->required();
  CLI::Option* explore_seed = nullptr;
  add_common(explore, common, explore_seed);

  std::string study, quick;
  auto* simulate = app.add_subcommand("simulate", "Generate data or run a Monte-Carlo study");
  simulate->add_option("--study", study, "Study config (JSON)");
  simulate->add_option("--quick", quick, "Built-in preset: ordinal-q1");
  CLI::Option* sim_seed = nullptr;
  add_common(simulate, common, sim_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) return cmd_fit(fit_args, common, fit_seed, argc, argv, out, err);
    if (*compare)
      return cmd_compare(cmp_args, q_range, common, cmp_seed, argc, argv, out, err);
    if (*explore) return cmd_explore(explore_data, common, argc, argv, out);
    if (*simulate) return cmd_simulate(study, quick, common, sim_seed, argc, argv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace polyfa
