#include "polyfa/exploratory.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <ostream>

#include "polyfa/numeric.hpp"

namespace polyfa {
namespace {

constexpr double kRhoBound = 0.999;

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> column_cutoffs(std::span<const int> column, int categories) {
  if (categories < 2) throw ValidationError("cutoffs: a variable needs at least 2 categories");
  if (column.empty()) throw ValidationError("cutoffs: empty column");
  std::vector<std::size_t> counts(static_cast<std::size_t>(categories), 0);
  for (int y : column) {
    if (y < 1 || y > categories) throw ValidationError("cutoffs: category out of range");
    counts[static_cast<std::size_t>(y - 1)]++;
  }
  const double n = static_cast<double>(column.size());
  std::vector<double> out;
  std::size_t cumulative = 0;
  for (int k = 1; k < categories; ++k) {
    cumulative += counts[static_cast<std::size_t>(k - 1)];
    const double prop = static_cast<double>(cumulative) / n;
    if (!(prop > 0.0 && prop < 1.0))
      throw ValidationError("cutoffs: cumulative proportion of 0 or 1 at category " +
                            std::to_string(k) + " (empty category)");
    out.push_back(normal_quantile(prop));
  }
  for (std::size_t k = 1; k < out.size(); ++k)
    if (!(out[k] > out[k - 1]))
      throw ValidationError("cutoffs: empty category " + std::to_string(k + 1));
  return out;
}

CutoffSet estimate_cutoffs(const CategoricalDataset& data) {
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < data.p(); ++j)
    rows.push_back(column_cutoffs(data.column(j), data.categories(j)));
  return CutoffSet(std::move(rows));
}

double polychoric_pair(std::span<const int> a, int categories_a, std::span<const int> b,
                       int categories_b) {
  if (a.size() != b.size()) throw DimensionError("polychoric_pair: columns differ in length");
  const auto ca = column_cutoffs(a, categories_a);
  const auto cb = column_cutoffs(b, categories_b);
  const auto ka = static_cast<std::size_t>(categories_a);
  const auto kb = static_cast<std::size_t>(categories_b);

  std::vector<double> table(ka * kb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    table[static_cast<std::size_t>(a[i] - 1) * kb + static_cast<std::size_t>(b[i] - 1)] += 1.0;

  auto bound = [](const std::vector<double>& c, std::size_t k, std::size_t edge) -> double {
    if (edge == 0) return -INFINITY;
    if (edge == k) return INFINITY;
    return c[edge - 1];
  };
  auto negative_log_lik = [&](double rho) {
    double ll = 0.0;
    for (std::size_t r = 0; r < ka; ++r) {
      for (std::size_t c = 0; c < kb; ++c) {
        const double count = table[r * kb + c];
        if (count == 0.0) continue;
        const double prob = bivariate_normal_rectangle(bound(ca, ka, r), bound(ca, ka, r + 1),
                                                       bound(cb, kb, c), bound(cb, kb, c + 1),
                                                       rho);
        ll += count * std::log(std::max(prob, kProbFloor));
      }
    }
    return -ll;
  };
  const auto result =
      boost::math::tools::brent_find_minima(negative_log_lik, -kRhoBound, kRhoBound, 40);
  return result.first;
}

Matrix polychoric_matrix(const CategoricalDataset& data) {
  const std::size_t p = data.p();
  Matrix rho(p, p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    rho(a, a) = 1.0;
    for (std::size_t b = 0; b < a; ++b) {
      const double r = polychoric_pair(data.column(a), data.categories(a), data.column(b),
                                       data.categories(b));
      rho(a, b) = r;
      rho(b, a) = r;
    }
  }
  return rho;
}

void write_polychoric_csv(std::ostream& out, const Matrix& rho,
                          const std::vector<std::string>& names) {
  auto name = [&](std::size_t j) {
    return j < names.size() ? names[j] : "v" + std::to_string(j + 1);
  };
  out << "variable";
  for (std::size_t j = 0; j < rho.cols; ++j) out << ',' << name(j);
  out << '\n';
  for (std::size_t r = 0; r < rho.rows; ++r) {
    out << name(r);
    for (std::size_t c = 0; c < rho.cols; ++c) out << ',' << csv_number(rho(r, c));
    out << '\n';
  }
}

void write_polychoric_long_csv(std::ostream& out, const Matrix& rho,
                               const std::vector<std::string>& names) {
  auto name = [&](std::size_t j) {
    return j < names.size() ? names[j] : "v" + std::to_string(j + 1);
  };
  out << "row,column,rho\n";
  for (std::size_t r = 0; r < rho.rows; ++r)
    for (std::size_t c = 0; c < rho.cols; ++c)
      out << name(r) << ',' << name(c) << ',' << csv_number(rho(r, c)) << '\n';
}

}  // namespace polyfa
