#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "polyfa/diagnostics.hpp"

using namespace polyfa;
using doctest::Approx;

namespace {

std::vector<double> iid(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = mean + sd * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("psrf") {
  const auto a = iid(500, 1);
  CHECK(psrf({a, a}) == Approx(1.0).epsilon(1e-9));
  CHECK(psrf({a, a, a, a}) == Approx(1.0).epsilon(1e-9));

  const double same = psrf({iid(1000, 2), iid(1000, 3)});
  CHECK(same >= 0.9);
  CHECK(same <= 1.1);

  auto zeros = iid(200, 4, 0.0, 1e-3), ones = iid(200, 5, 1.0, 1e-3);
  CHECK(psrf({zeros, ones}) > 10.0);

  CHECK_THROWS_AS(psrf({a}), ValidationError);
  CHECK(psrf({std::vector<double>(20, 1.0), std::vector<double>(20, 1.0)}) == 1.0);
}

TEST_CASE("effective sample size") {
  const auto x = iid(4000, 6);
  CHECK(effective_sample_size(x) == Approx(4000).epsilon(0.2));

  Rng rng(7);
  const double rho = 0.9;
  std::vector<double> ar(20000);
  double v = 0.0;
  for (double& a : ar) {
    v = rho * v + std::sqrt(1 - rho * rho) * rng.normal();
    a = v;
  }
  const double expected = 20000 * (1 - rho) / (1 + rho);
  CHECK(effective_sample_size(ar) == Approx(expected).epsilon(0.3));

  CHECK(effective_sample_size(std::vector<double>(50, 3.0)) == 50);
  CHECK(effective_sample_size(x) <= 4000);
}

TEST_CASE("bimodality flag") {
  CHECK_FALSE(bimodality_flag(iid(2000, 8)));
  Rng rng(9);
  std::vector<double> mix(2000);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = (i % 2 ? 3.0 : -3.0) + 0.2 * rng.normal();
  CHECK(bimodality_flag(mix));
  CHECK_FALSE(bimodality_flag(std::vector<double>(500, 1.0)));
  CHECK(bimodality_coefficient(mix) > 5.0 / 9.0);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{4, 1, 3, 2, 5};
  CHECK(quantile(v, 0.0) == 1);
  CHECK(quantile(v, 1.0) == 5);
  CHECK(quantile(v, 0.5) == 3);
  CHECK(quantile(v, 0.1) == Approx(1.4));
}

TEST_CASE("Monte-Carlo metrics") {
  const std::vector<IntervalEstimate> exact(4, {1.0, 0.5, 1.5});
  auto m = monte_carlo_metrics(1.0, exact);
  CHECK(m.rmse == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(m.coverage == 100.0);

  const std::vector<IntervalEstimate> alt{{2.0, 1.5, 2.5}, {0.0, -1.0, 1.5}, {2.0, 1.5, 2.5},
                                          {0.0, -1.0, 1.5}};
  m = monte_carlo_metrics(1.0, alt);
  CHECK(m.rmse == Approx(1.0));
  CHECK(m.mae == Approx(1.0));
  CHECK(m.coverage == Approx(50.0));

  CHECK_THROWS_AS(monte_carlo_metrics(0.0, std::vector<IntervalEstimate>{}), ValidationError);

  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    std::vector<IntervalEstimate> r(7);
    for (auto& e : r) e = {rng.normal(), -1, 1};
    const auto mm = monte_carlo_metrics(0.2, r);
    CHECK(mm.mae <= mm.rmse + 1e-15);
  }
}

TEST_CASE("variance decomposition") {
  CHECK(variance_decomposition(std::vector<double>{0.99}, 0.01) ==
        Approx(98.990001009998990001).epsilon(1e-13));
  CHECK(variance_decomposition(std::vector<double>{0.80}, 0.05) ==
        Approx(92.753623188405797101).epsilon(1e-13));
  CHECK(variance_decomposition(std::vector<double>{0.0, 0.0}, 0.7) == 0.0);

  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> row{rng.normal(), rng.normal(), rng.normal()};
    const double s2 = 0.01 + rng.uniform();
    const double total = variance_decomposition(row, s2);
    const auto parts = variance_decomposition_by_factor(row, s2);
    CHECK(total >= 0.0);
    CHECK(total <= 100.0);
    CHECK(parts[0] + parts[1] + parts[2] == Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("summaries of a hand-built sample") {
  PosteriorSample sample;
  sample.spec.q = 1;
  sample.spec.cutoffs = CutoffSet(testing::Cuts{{0.0}, {0.0}});
  sample.n = 1;
  sample.p = 2;
  for (std::uint64_t c = 0; c < 2; ++c) {
    ChainDraws d;
    d.count = 200;
    d.p = 2;
    d.q = 1;
    d.n = 1;
    Rng rng(c + 20);
    for (std::size_t s = 0; s < d.count; ++s) {
      d.loadings.push_back(1.0 + 0.1 * rng.normal());
      d.loadings.push_back(0.5 + 0.1 * rng.normal());
      d.variances.push_back(0.5);
      d.variances.push_back(0.25);
      d.factors.push_back(rng.normal());
      d.pointwise.push_back(-1.0);
      d.log_lik.push_back(-1.0);
    }
    sample.chains.push_back(d);
  }
  const auto traces = parameter_traces(sample, true);
  REQUIRE(traces.size() == 5);
  CHECK(traces[0].name == "beta_1_1");
  CHECK(traces[2].name == "sigma2_1");
  CHECK(traces[4].name == "f_1_1");

  const auto rows = summarize(sample, false);
  CHECK(rows.size() == 4);
  CHECK(rows[0].mean == Approx(1.0).epsilon(0.02));
  CHECK(rows[0].lower <= rows[0].upper);
  CHECK(max_psrf(rows) < 1.1);

  std::ostringstream csv;
  write_summary_csv(csv, rows);
  CHECK(csv.str().rfind("parameter,mean,q2.5,q97.5,ess,psrf,bimodal\n", 0) == 0);

  const auto dv = variance_decomposition_summary(sample);
  REQUIRE(dv.size() == 2);
  CHECK(dv[0].total.estimate == Approx(100.0 * 1.01 / 1.51).epsilon(0.02));
  CHECK(dv[0].by_factor[0].estimate == Approx(dv[0].total.estimate).epsilon(1e-12));

  sample.spec.kind = ModelKind::nominal;
  CHECK_THROWS_AS(variance_decomposition_summary(sample), ValidationError);
}

TEST_CASE("histogram counts every draw") {
  const auto x = iid(1000, 30);
  const auto bins = histogram(x, 20);
  REQUIRE(bins.size() == 20);
  std::size_t total = 0;
  for (const auto& b : bins) {
    CHECK(b.lower < b.upper);
    total += b.count;
  }
  CHECK(total == 1000);
}
