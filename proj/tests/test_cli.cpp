#include <algorithm>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "polyfa/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polyfa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = polyfa::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

}  // namespace

TEST_CASE("simulate --quick then fit, reproducibly") {
  const auto dir = testing::scratch_dir("cli_fit");
  const auto sim = (dir / "sim").string();
  REQUIRE(cli({"simulate", "--quick", "ordinal-q1", "--seed", "3", "--out", sim}).code == 0);
  const auto data = (dir / "sim" / "data.csv").string();
  REQUIRE(fs::exists(data));
  {
    std::ifstream in(data);
    const auto d = polyfa::load_dataset(in);
    CHECK(d.n() == 300);
    CHECK(d.p() == 5);
    CHECK(d.categories() == std::vector<int>(5, 4));
  }
  CHECK(testing::slurp(data) ==
        testing::slurp(fs::path(sim) / "data.csv"));  // sanity on the helper

  const std::vector<std::string> fit{"fit",     "--data",  data, "--model", "ordinal-probit",
                                     "--q",     "1",       "--iters", "300", "--burnin",
                                     "100",     "--thin",  "2",  "--seed",  "11"};
  auto a = fit;
  a.insert(a.end(), {"--out", (dir / "a").string()});
  auto b = fit;
  b.insert(b.end(), {"--out", (dir / "b").string()});
  const auto ra = cli(a), rb = cli(b);
  CHECK((ra.code == 0 || ra.code == 2));
  CHECK(ra.code == rb.code);
  for (const char* f : {"draws.csv", "summary.csv", "dv.csv", "cutoffs.csv", "manifest.json"})
    CHECK(fs::exists(dir / "a" / f));
  CHECK(testing::slurp(dir / "a" / "draws.csv") == testing::slurp(dir / "b" / "draws.csv"));
  CHECK(first_line(testing::slurp(dir / "a" / "draws.csv")).rfind("chain,draw,beta_1_1", 0) == 0);

  const auto manifest = nlohmann::json::parse(testing::slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["seed"] == 11);
  CHECK(manifest.contains("input"));
  CHECK(manifest.contains("version"));

  const auto sim2 = (dir / "sim2").string();
  REQUIRE(cli({"simulate", "--quick", "ordinal-q1", "--seed", "3", "--out", sim2}).code == 0);
  CHECK(testing::slurp(fs::path(sim2) / "data.csv") == testing::slurp(data));

  auto cut = fit;
  cut.insert(cut.end(), {"--cutoffs", "file:" + (dir / "sim" / "cutoffs.csv").string(), "--out",
                         (dir / "c").string()});
  const auto rc = cli(cut);
  CHECK((rc.code == 0 || rc.code == 2));
}

TEST_CASE("fit argument errors exit 1 with a useful message") {
  const auto dir = testing::scratch_dir("cli_err");
  REQUIRE(cli({"simulate", "--quick", "ordinal-q1", "--seed", "1", "--out", dir.string()}).code == 0);
  const auto data = (dir / "data.csv").string();

  auto r = cli({"fit", "--data", data, "--model", "ordinal-probit", "--q", "3", "--seed", "1",
                "--out", (dir / "x").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("max_factors") != std::string::npos);

  r = cli({"fit", "--data", data, "--model", "ordinal-probit", "--q", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--seed") != std::string::npos);

  r = cli({"fit", "--data", data, "--model", "probit", "--q", "1", "--seed", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--model") != std::string::npos);

  r = cli({"fit", "--data", (dir / "missing.csv").string(), "--model", "nominal", "--q", "1",
           "--seed", "1"});
  CHECK(r.code == 1);

  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"frobnicate"}).code == 1);
}

TEST_CASE("compare writes the criteria table and clips q") {
  const auto dir = testing::scratch_dir("cli_compare");
  REQUIRE(cli({"simulate", "--quick", "ordinal-q1", "--seed", "2", "--out", dir.string()}).code == 0);
  const auto r = cli({"compare", "--data", (dir / "data.csv").string(), "--model", "ordinal-probit",
                      "--q-range", "1..4", "--iters", "200", "--burnin", "60", "--thin", "2",
                      "--seed", "4", "--out", (dir / "cmp").string()});
  CHECK((r.code == 0 || r.code == 2));
  CHECK(r.err.find("clipped") != std::string::npos);
  const auto csv = testing::slurp(dir / "cmp" / "criteria.csv");
  CHECK(first_line(csv) == "q,AIC,BIC,WAIC,lppd,pWAIC,m,best_AIC,best_BIC,best_WAIC");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const auto json = nlohmann::json::parse(testing::slurp(dir / "cmp" / "criteria.json"));
  CHECK(json["rows"].size() == 2);

  CHECK(cli({"compare", "--data", (dir / "data.csv").string(), "--model", "ordinal-probit",
             "--q-range", "3-1", "--seed", "4", "--out", (dir / "bad").string()})
            .code == 1);
}

TEST_CASE("explore writes a symmetric matrix, including p = 1") {
  const auto dir = testing::scratch_dir("cli_explore");
  {
    std::ofstream f(dir / "one.csv");
    f << "x\n1\n2\n3\n2\n1\n";
  }
  auto r = cli({"explore", "--data", (dir / "one.csv").string(), "--seed", "1", "--out",
                (dir / "one").string()});
  REQUIRE(r.code == 0);
  CHECK(testing::slurp(dir / "one" / "polychoric.csv") == "variable,x\nx,1\n");

  REQUIRE(cli({"simulate", "--quick", "ordinal-q1", "--seed", "8", "--out", dir.string()}).code == 0);
  r = cli({"explore", "--data", (dir / "data.csv").string(), "--seed", "1", "--out",
           (dir / "five").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"polychoric.csv", "polychoric_long.csv", "cutoffs.csv", "manifest.json"})
    CHECK(fs::exists(dir / "five" / f));
}

TEST_CASE("simulate --study with two replicates") {
  const auto dir = testing::scratch_dir("cli_study");
  {
    std::ofstream f(dir / "study.json");
    f << R"({"name": "tiny", "replicates": 2,
      "generator": {"model": "ordinal-probit", "n": 50, "loadings": [[0.9], [0.7], [0.5]],
                    "variances": [0.2, 0.3, 0.4], "cutoff_quantiles": [0.5]},
      "fit": {"model": "ordinal-probit", "q": [1], "iterations": 150, "burn_in": 50,
              "thin": 2, "chains": 2, "cutoffs": "estimate"}})";
  }
  const auto r = cli({"simulate", "--study", (dir / "study.json").string(), "--seed", "5",
                      "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto reps = testing::slurp(dir / "out" / "replicates.csv");
  CHECK(std::count(reps.begin(), reps.end(), '\n') == 3);

  {
    std::ofstream f(dir / "broken.json");
    f << R"({"replicates": 2, "generator": {"model": "ordinal-probit", "n": -3}})";
  }
  const auto bad = cli({"simulate", "--study", (dir / "broken.json").string(), "--seed", "5",
                        "--out", (dir / "bad").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("generator.") != std::string::npos);
}
