#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "polyfa/nominal_model.hpp"
#include "polyfa/ordinal_model.hpp"

using namespace polyfa;
using doctest::Approx;

TEST_CASE("cumulative probabilities") {
  CHECK(cumulative_prob(LinkKind::probit, 0, 0, 1) == 0.5);
  CHECK(cumulative_prob(LinkKind::logit, 0, 0, 1) == 0.5);
  CHECK(cumulative_prob(LinkKind::probit, 0, 0.5, 1) ==
        Approx(0.30853753872598689636).epsilon(1e-15));
  CHECK(cumulative_prob(LinkKind::probit, -INFINITY, 3, 1) == 0.0);
  CHECK(cumulative_prob(LinkKind::logit, INFINITY, 3, 1) == 1.0);
  CHECK_THROWS_AS(cumulative_prob(LinkKind::probit, 0, 0, 0), ValidationError);
}

TEST_CASE("normal CDF against tabulated values") {
  CHECK(normal_cdf(-1.0) == Approx(0.15865525393145705141).epsilon(1e-15));
  CHECK(normal_cdf(1.0) == Approx(0.84134474606854294859).epsilon(1e-15));
  CHECK(normal_cdf(1.0 / std::sqrt(2.0)) == Approx(0.76024993890652326884).epsilon(1e-15));
  CHECK(normal_quantile(0.40) == Approx(-0.25334710313579974132).epsilon(1e-14));
  CHECK(normal_quantile(0.90) == Approx(1.2815515655446005935).epsilon(1e-14));
}

TEST_CASE("category probabilities") {
  const auto two = category_probs(LinkKind::probit, std::vector<double>{0.0}, 0, 1, 2);
  CHECK(two[0] == Approx(0.5));
  CHECK(two[1] == Approx(0.5));

  const auto four = category_probs(LinkKind::probit, std::vector<double>{-1, 0, 1}, 0, 1, 4);
  CHECK(four[0] == Approx(0.15865525393145705141).epsilon(1e-14));
  CHECK(four[1] == Approx(0.34134474606854294859).epsilon(1e-14));
  CHECK(four[2] == Approx(0.34134474606854294859).epsilon(1e-14));
  CHECK(four[3] == Approx(0.15865525393145705141).epsilon(1e-14));

  const auto logit = category_probs(LinkKind::logit, std::vector<double>{0.0}, 2, 1, 2);
  CHECK(logit[0] == Approx(0.11920292202211755594).epsilon(1e-14));
  CHECK(logit[1] == Approx(0.88079707797788244406).epsilon(1e-14));

  CHECK_THROWS_AS(category_probs(LinkKind::probit, std::vector<double>{1, 0}, 0, 1, 3),
                  ValidationError);
}

TEST_CASE("category probabilities sum to one") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 2 + trial % 6;
    std::vector<double> cuts;
    double c = -2.0 + rng.normal();
    for (int m = 1; m < k; ++m) {
      cuts.push_back(c);
      c += 0.05 + 2.0 * rng.uniform();
    }
    for (LinkKind link : {LinkKind::probit, LinkKind::logit}) {
      const auto pi = category_probs(link, cuts, 3.0 * rng.normal(), 0.05 + 3 * rng.uniform(), k);
      for (double v : pi) CHECK(v >= 0.0);
      CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("cumulative probability is monotone") {
  for (LinkKind link : {LinkKind::probit, LinkKind::logit}) {
    double prev = 0.0;
    for (double a = -6; a <= 6; a += 0.25) {
      const double g = cumulative_prob(link, a, 0.3, 0.8);
      CHECK(g >= prev);
      prev = g;
    }
    prev = 1.0;
    for (double eta = -6; eta <= 6; eta += 0.25) {
      const double g = cumulative_prob(link, 0.2, eta, 0.8);
      CHECK(g <= prev);
      prev = g;
    }
  }
}

TEST_CASE("scale non-identifiability") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = 2 * rng.normal(), beta = rng.normal(), f = rng.normal();
    const double sigma = 0.1 + rng.uniform(), c = 0.1 + 5 * rng.uniform();
    for (LinkKind link : {LinkKind::probit, LinkKind::logit}) {
      const double base = cumulative_prob(link, alpha, beta * f, sigma);
      const double scaled =
          cumulative_prob(link, c * alpha, (std::sqrt(c) * beta) * (std::sqrt(c) * f), c * sigma);
      CHECK(scaled == Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("single-cell log-likelihood") {
  CHECK(cell_log_prob(LinkKind::probit, -INFINITY, 0.0, 0.5, 1.0) ==
        Approx(-1.1759117615936186089).epsilon(1e-14));

  const auto d = testing::make_data(2, 1, 2, {1, 2});
  ModelSpec spec;
  spec.cutoffs = CutoffSet(testing::Cuts{{0.0}});
  auto s = ParameterState::zeros(1, 1, 2, 1, true);
  s.loadings = {1.0};
  s.variances = {1.0};
  s.factors = {0.5, 0.5};
  const auto pw = pointwise_log_likelihood(d, s, spec);
  CHECK(pw[0] == Approx(-1.1759117615936186089).epsilon(1e-14));
  CHECK(pw[1] == Approx(std::log(0.69146246127401310364)).epsilon(1e-14));

  s.factors = {0.0, 0.0};
  const auto flat = testing::random_data(20, 3, 2, 4);
  spec.cutoffs = CutoffSet(std::vector<std::vector<double>>(3, {0.0}));
  auto z = ParameterState::zeros(3, 1, 20, 1, true);
  z.loadings = {1.0, 0.3, -0.4};
  z.variances = {1, 1, 1};
  CHECK(log_likelihood(flat, z, spec) == Approx(60 * std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log-likelihood matches cell-wise enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_data(3, 2, 3, 100 + trial);
    ModelSpec spec;
    spec.kind = trial % 2 ? ModelKind::ordinal_logit : ModelKind::ordinal_probit;
    spec.cutoffs = CutoffSet(testing::Cuts{{-0.4, 0.9}, {-1.1, 0.2}});
    auto s = ParameterState::zeros(2, 1, 3, 1, true);
    s.loadings = {0.2 + rng.uniform(), rng.normal()};
    s.variances = {0.2 + rng.uniform(), 0.2 + rng.uniform()};
    for (double& f : s.factors) f = rng.normal();

    double oracle = 0.0;
    const LinkKind link = link_of(spec.kind);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const auto& c = spec.cutoffs->interior(j);
        const double eta = s.beta(j, 0) * s.factor(0, i);
        const double sd = std::sqrt(s.variances[j]);
        const int y = d.value(i, j);
        const double hi = y == 3 ? 1.0 : cumulative_prob(link, c[y - 1], eta, sd);
        const double lo = y == 1 ? 0.0 : cumulative_prob(link, c[y - 2], eta, sd);
        oracle += std::log(hi - lo);
      }
    CHECK(log_likelihood(d, s, spec) == Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("log-likelihood rejects mismatched dimensions") {
  const auto d = testing::random_data(5, 2, 2, 1);
  ModelSpec spec;
  spec.cutoffs = CutoffSet(testing::Cuts{{0.0}, {0.0}});
  auto s = ParameterState::zeros(2, 1, 4, 1, true);
  s.loadings = {1, 0};
  s.variances = {1, 1};
  CHECK_THROWS_AS(log_likelihood(d, s, spec), DimensionError);
}

TEST_CASE("marginal probit link") {
  const std::vector<double> b99{0.99}, b0{0.0}, b1{1.0};
  CHECK(marginal_cumulative_probit(0.0, b99, 0.1) == 0.5);
  CHECK(marginal_cumulative_probit(1.0, b0, 1.0) == Approx(0.84134474606854294859).epsilon(1e-15));
  CHECK(marginal_cumulative_probit(1.0, b1, 1.0) == Approx(0.76024993890652326884).epsilon(1e-15));
  CHECK_THROWS_AS(marginal_cumulative_probit(1.0, b1, 0.0), ValidationError);
}

TEST_CASE("marginal probit equals integration of the conditional link") {
  using boost::math::quadrature::gauss_kronrod;
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const double alpha = 1.5 * rng.normal(), sigma = 0.1 + rng.uniform();
    std::vector<double> beta{rng.normal()};
    if (trial % 2) beta.push_back(rng.normal());
    const double closed = marginal_cumulative_probit(alpha, beta, sigma);

    // independent oracle: nested 1-D integrals over each factor coordinate
    auto inner = [&](double f1) {
      if (beta.size() == 1)
        return normal_cdf((alpha - beta[0] * f1) / sigma);
      return gauss_kronrod<double, 31>::integrate(
          [&](double f2) {
            return normal_cdf((alpha - beta[0] * f1 - beta[1] * f2) / sigma) *
                   std::exp(-0.5 * f2 * f2) / std::sqrt(2 * M_PI);
          },
          -INFINITY, INFINITY, 15, 1e-12);
    };
    const double numeric = gauss_kronrod<double, 31>::integrate(
        [&](double f1) { return inner(f1) * std::exp(-0.5 * f1 * f1) / std::sqrt(2 * M_PI); },
        -INFINITY, INFINITY, 15, 1e-12);
    CHECK(closed == Approx(numeric).epsilon(1e-6));
    CHECK(marginal_cumulative(LinkKind::probit, alpha, beta, sigma) ==
          Approx(closed).epsilon(1e-8));
  }
}

TEST_CASE("latent covariance") {
  auto one = ParameterState::zeros(1, 1, 0, 1, true);
  one.loadings = {1.0};
  one.variances = {1.0};
  CHECK(latent_covariance(one)(0, 0) == 2.0);

  const auto t = testing::one_factor_truth();
  auto cov = latent_covariance(t);
  for (std::size_t a = 0; a < 5; ++a) {
    CHECK(cov(a, a) == Approx(t.loadings[a] * t.loadings[a] + t.variances[a]));
    for (std::size_t b = 0; b < 5; ++b) {
      CHECK(cov(a, b) == cov(b, a));
      if (a != b) CHECK(cov(a, b) == Approx(t.loadings[a] * t.loadings[b]));
    }
  }
  CHECK(cov(0, 0) == Approx(0.9901));
  CHECK(cholesky_in_place(cov));
}

TEST_CASE("nominal category probabilities") {
  const std::vector<double> zero(3, 0.0), f0{0.0};
  for (double v : category_probs_nominal(zero, f0)) CHECK(v == Approx(0.25));

  const auto two = category_probs_nominal(std::vector<double>{1.0}, std::vector<double>{1.0});
  CHECK(two[0] == Approx(0.26894142136999512075).epsilon(1e-14));
  CHECK(two[1] == Approx(0.73105857863000487925).epsilon(1e-14));

  const auto three =
      category_probs_nominal(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0});
  CHECK(three[0] == Approx(0.24472847105479765247).epsilon(1e-14));
  CHECK(three[1] == Approx(0.66524095577482188953).epsilon(1e-14));
  CHECK(three[2] == Approx(0.09003057317038045800).epsilon(1e-14));

  const auto big = category_probs_nominal(std::vector<double>{800.0, -800.0, 3.0},
                                          std::vector<double>{2.0});
  for (double v : big) CHECK(std::isfinite(v));
  CHECK(std::accumulate(big.begin(), big.end(), 0.0) == Approx(1.0).epsilon(1e-12));

  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> rows(6), f(2);
    for (double& r : rows) r = 3 * rng.normal();
    for (double& x : f) x = rng.normal();
    const auto pi = category_probs_nominal(rows, f);
    CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == Approx(1.0).epsilon(1e-12));
  }

  const std::vector<double> shared{0.7, 0.7, 0.7};
  for (double v : category_probs_nominal(shared, f0)) CHECK(v == Approx(0.25));
}

TEST_CASE("nominal log-likelihood") {
  ModelSpec spec;
  spec.kind = ModelKind::nominal;

  const auto d = testing::make_data(2, 1, 2, {2, 1});
  auto s = ParameterState::zeros(1, 1, 2, 1, false);
  s.loadings = {1.0};
  s.factors = {1.0, 0.0};
  const auto pw = pointwise_log_likelihood_nominal(d, s, spec);
  CHECK(pw[0] == Approx(-0.31326168751822283405).epsilon(1e-14));
  CHECK(pw[1] == Approx(std::log(0.5)));

  const auto big = testing::random_data(15, 3, 4, 2);
  auto z = ParameterState::zeros(3, 1, 15, 3, false);
  for (double& b : z.loadings) b = 0.4;
  CHECK(log_likelihood_nominal(big, z, spec) == Approx(45 * std::log(0.25)).epsilon(1e-13));
}

TEST_CASE("nominal log-likelihood matches enumeration and unit permutation") {
  ModelSpec spec;
  spec.kind = ModelKind::nominal;
  spec.q = 2;
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = testing::random_data(3, 3, 3, 50 + trial);
    auto s = ParameterState::zeros(3, 2, 3, 2, false);
    for (std::size_t set = 0; set < 2; ++set)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t l = 0; l <= std::min<std::size_t>(j, 1); ++l)
          s.beta(j, l, set) = l == j ? 0.2 + rng.uniform() : rng.normal();
    for (double& f : s.factors) f = rng.normal();

    double oracle = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double e[3] = {0.0, 0.0, 0.0};
        for (std::size_t set = 0; set < 2; ++set)
          for (std::size_t l = 0; l < 2; ++l) e[set + 1] += s.beta(j, l, set) * s.factor(l, i);
        const double denom = std::exp(e[0]) + std::exp(e[1]) + std::exp(e[2]);
        oracle += e[d.value(i, j) - 1] - std::log(denom);
      }
    CHECK(log_likelihood_nominal(d, s, spec) == Approx(oracle).epsilon(1e-12));

    // reverse unit order in both data and factors
    std::vector<int> rows;
    for (std::size_t i = 3; i-- > 0;)
      for (std::size_t j = 0; j < 3; ++j) rows.push_back(d.value(i, j));
    const auto rd = testing::make_data(3, 3, 3, rows);
    auto rs = s;
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < 3; ++i) rs.factor(l, i) = s.factor(l, 2 - i);
    CHECK(log_likelihood_nominal(rd, rs, spec) == Approx(oracle).epsilon(1e-12));
  }
}
