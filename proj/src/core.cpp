#include "polyfa/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace polyfa {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ordinal_probit: return "ordinal-probit";
    case ModelKind::ordinal_logit: return "ordinal-logit";
    case ModelKind::nominal: return "nominal";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "ordinal-probit") return ModelKind::ordinal_probit;
  if (text == "ordinal-logit") return ModelKind::ordinal_logit;
  if (text == "nominal") return ModelKind::nominal;
  throw ValidationError("model: unknown kind '" + std::string(text) +
                        "' (expected ordinal-probit, ordinal-logit or nominal)");
}

bool is_ordinal(ModelKind kind) { return kind != ModelKind::nominal; }

LinkKind link_of(ModelKind kind) {
  return kind == ModelKind::ordinal_logit ? LinkKind::logit : LinkKind::probit;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<long> parse_int(std::string_view s) {
  long v = 0;
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // from_chars for double is available in libstdc++ 11
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

CategoricalDataset::CategoricalDataset(std::size_t n, std::size_t p,
                                       std::vector<int> categories,
                                       std::span<const int> values,
                                       std::vector<std::string> names)
    : n_(n), p_(p), categories_(std::move(categories)), names_(std::move(names)) {
  if (categories_.size() != p_)
    throw DimensionError("dataset: category count vector has length " +
                         std::to_string(categories_.size()) + ", expected " +
                         std::to_string(p_));
  if (values.size() != n_ * p_)
    throw DimensionError("dataset: value count does not match n * p");
  if (!names_.empty() && names_.size() != p_)
    throw DimensionError("dataset: names vector does not match p");
  for (std::size_t j = 0; j < p_; ++j)
    if (categories_[j] < 2)
      throw ValidationError("dataset: variable " + std::to_string(j + 1) +
                            " declares fewer than 2 categories");

  values_.resize(n_ * p_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < p_; ++j) {
      const int v = values[i * p_ + j];
      if (v < 1 || v > categories_[j])
        throw ValidationError("dataset: category index out of range at row " +
                              std::to_string(i + 1) + ", column " +
                              std::to_string(j + 1) + " (value " +
                              std::to_string(v) + ", K=" +
                              std::to_string(categories_[j]) + ")");
      values_[j * n_ + i] = v;
    }
  }
  if (n_ > 0) {
    for (std::size_t j = 0; j < p_; ++j) {
      const auto counts = category_counts(j);
      for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0)
          throw ValidationError("dataset: empty category " + std::to_string(k + 1) +
                                " in column " + std::to_string(j + 1));
    }
  }
}

CategoricalDataset CategoricalDataset::empty(std::size_t p,
                                             std::vector<int> categories) {
  return CategoricalDataset(0, p, std::move(categories), {});
}

std::optional<int> CategoricalDataset::uniform_categories() const {
  if (categories_.empty()) return std::nullopt;
  const int k = categories_.front();
  for (int c : categories_)
    if (c != k) return std::nullopt;
  return k;
}

std::string CategoricalDataset::variable_name(std::size_t j) const {
  if (!names_.empty()) return names_[j];
  return "v" + std::to_string(j + 1);
}

std::vector<std::size_t> CategoricalDataset::category_counts(std::size_t j) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(categories_[j]), 0);
  for (int v : column(j)) ++counts[static_cast<std::size_t>(v - 1)];
  return counts;
}

CategoricalDataset load_dataset(std::istream& in) {
  std::vector<int> declared;
  std::vector<std::string> names;
  std::vector<int> values;
  std::size_t p = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool seen_row = false;
  std::string line;

  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      auto body = trim(text.substr(1));
      if (body.starts_with("K=") || body.starts_with("K =")) {
        body = trim(body.substr(body.find('=') + 1));
        declared.clear();
        for (auto tok : split(body)) {
          const auto k = parse_int(tok);
          if (!k || *k < 2)
            throw ValidationError("dataset: malformed #K directive on line " +
                                  std::to_string(line_no));
          declared.push_back(static_cast<int>(*k));
        }
      }
      continue;
    }
    const auto cells = split(text);
    if (!seen_row && names.empty()) {
      const bool all_int = std::all_of(cells.begin(), cells.end(),
                                       [](auto c) { return parse_int(c).has_value(); });
      if (!all_int) {
        for (auto c : cells) names.emplace_back(c);
        p = cells.size();
        continue;
      }
    }
    if (p == 0) p = cells.size();
    if (cells.size() != p)
      throw ValidationError("dataset: ragged rows (line " + std::to_string(line_no) +
                            " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(p) + ")");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_int(cells[c]);
      if (!v)
        throw ValidationError("dataset: non-integer cell '" + std::string(cells[c]) +
                              "' on line " + std::to_string(line_no));
      if (*v < 1)
        throw ValidationError("dataset: category index out of range on line " +
                              std::to_string(line_no) + " (value " +
                              std::to_string(*v) + ")");
      values.push_back(static_cast<int>(*v));
    }
    seen_row = true;
    ++rows;
  }
  if (p == 0) throw ValidationError("dataset: no columns");

  std::vector<int> categories(p, 0);
  if (declared.size() == 1) {
    std::fill(categories.begin(), categories.end(), declared.front());
  } else if (declared.size() == p) {
    categories = declared;
  } else if (!declared.empty()) {
    throw ValidationError("dataset: #K directive lists " +
                          std::to_string(declared.size()) + " counts for " +
                          std::to_string(p) + " variables");
  } else {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < p; ++j)
        categories[j] = std::max(categories[j], values[i * p + j]);
    for (auto& k : categories) k = std::max(k, 2);
  }
  return CategoricalDataset(rows, p, std::move(categories), values, std::move(names));
}

CategoricalDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("dataset: cannot open '" + path + "'");
  return load_dataset(in);
}

void write_dataset(std::ostream& out, const CategoricalDataset& data) {
  out << "#K=";
  if (auto k = data.uniform_categories()) {
    out << *k;
  } else {
    for (std::size_t j = 0; j < data.p(); ++j)
      out << (j ? "," : "") << data.categories(j);
  }
  out << '\n';
  if (!data.names().empty()) {
    for (std::size_t j = 0; j < data.p(); ++j)
      out << (j ? "," : "") << data.names()[j];
    out << '\n';
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.p(); ++j)
      out << (j ? "," : "") << data.value(i, j);
    out << '\n';
  }
}

CutoffSet::CutoffSet(std::vector<std::vector<double>> cutoffs)
    : cutoffs_(std::move(cutoffs)) {
  for (std::size_t j = 0; j < cutoffs_.size(); ++j) {
    const auto& c = cutoffs_[j];
    if (c.empty())
      throw ValidationError("cutoffs: variable " + std::to_string(j + 1) +
                            " has no interior cutoffs");
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (!std::isfinite(c[k]))
        throw ValidationError("cutoffs: non-finite cutoff for variable " +
                              std::to_string(j + 1));
      if (k > 0 && !(c[k] > c[k - 1]))
        throw ValidationError("cutoffs: non-monotone cutoffs for variable " +
                              std::to_string(j + 1));
    }
  }
}

double CutoffSet::alpha(std::size_t j, int k) const {
  const auto& c = cutoffs_[j];
  if (k <= 0) return -INFINITY;
  if (k > static_cast<int>(c.size())) return INFINITY;
  return c[static_cast<std::size_t>(k - 1)];
}

CutoffSet load_cutoffs(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto cells = split(text);
    std::vector<double> row;
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_double(cells[c]);
      if (!v) {
        // leading label column is allowed
        if (c == 0 && cells.size() > 1) continue;
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header row
      throw ValidationError("cutoffs: non-numeric value on line " +
                            std::to_string(line_no));
    }
    if (row.empty()) continue;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("cutoffs: file contains no rows");
  return CutoffSet(std::move(rows));
}

CutoffSet load_cutoffs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cutoffs: cannot open '" + path + "'");
  return load_cutoffs(in);
}

void write_cutoffs(std::ostream& out, const CutoffSet& cutoffs,
                   const std::vector<std::string>& names) {
  std::size_t width = 0;
  for (std::size_t j = 0; j < cutoffs.p(); ++j)
    width = std::max(width, cutoffs.interior(j).size());
  out << "variable";
  for (std::size_t k = 1; k <= width; ++k) out << ",alpha_" << k;
  out << '\n';
  std::ostringstream num;
  num.precision(17);
  for (std::size_t j = 0; j < cutoffs.p(); ++j) {
    out << (names.empty() ? "v" + std::to_string(j + 1) : names[j]);
    for (double a : cutoffs.interior(j)) {
      num.str({});
      num << a;
      out << ',' << num.str();
    }
    out << '\n';
  }
}

void PriorConfig::validate() const {
  if (!(c0 > 0)) throw ValidationError("prior: C0 must be positive");
  if (!(nu > 0)) throw ValidationError("prior: nu must be positive");
  if (!(s2 > 0)) throw ValidationError("prior: s2 must be positive");
}

void ModelSpec::validate() const {
  prior.validate();
  if (q < 1) throw ValidationError("model: q must be at least 1");
  if (is_ordinal(kind) && !cutoffs)
    throw ValidationError("model: ordinal models require cutoffs");
  if (!is_ordinal(kind) && cutoffs)
    throw ValidationError("model: nominal models take no cutoffs");
  if (shared_loadings && is_ordinal(kind))
    throw ValidationError("model: shared loadings apply to nominal models only");
}

void ModelSpec::validate_for(const CategoricalDataset& data) const {
  validate();
  const std::size_t bound = max_factors(data.p());
  if (q > bound)
    throw ValidationError("q: " + std::to_string(q) +
                          " exceeds the identifiability bound max_factors(p=" +
                          std::to_string(data.p()) + ") = " + std::to_string(bound) +
                          " from p(p+1)/2 - p(q+1) + q(q-1)/2 >= 0");
  if (cutoffs) {
    if (cutoffs->p() != data.p())
      throw ValidationError("cutoffs: " + std::to_string(cutoffs->p()) +
                            " variables, dataset has " + std::to_string(data.p()));
    for (std::size_t j = 0; j < data.p(); ++j)
      if (cutoffs->categories(j) != data.categories(j))
        throw ValidationError("cutoffs: variable " + std::to_string(j + 1) +
                              " implies K=" + std::to_string(cutoffs->categories(j)) +
                              ", dataset has K=" + std::to_string(data.categories(j)));
  }
  if (kind == ModelKind::nominal && !data.uniform_categories())
    throw ValidationError("model: nominal models require a common K across variables");
}

ParameterState ParameterState::zeros(std::size_t p, std::size_t q, std::size_t n,
                                     std::size_t loading_sets, bool with_variances) {
  ParameterState s;
  s.p = p;
  s.q = q;
  s.n = n;
  s.loading_sets = loading_sets;
  s.loadings.assign(loading_sets * p * q, 0.0);
  if (with_variances) s.variances.assign(p, 1.0);
  s.factors.assign(q * n, 0.0);
  return s;
}

bool ParameterState::satisfies_constraints() const {
  for (std::size_t set = 0; set < loading_sets; ++set)
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t l = 0; l < q; ++l) {
        const double b = beta(j, l, set);
        if (l > j && b != 0.0) return false;
        if (l == j && !(b > 0.0)) return false;
        if (!std::isfinite(b)) return false;
      }
  for (double v : variances)
    if (!(v > 0.0) || !std::isfinite(v)) return false;
  return true;
}

void ParameterState::check_shape() const {
  if (loadings.size() != loading_sets * p * q)
    throw DimensionError("state: loadings size does not match p * q");
  if (!variances.empty() && variances.size() != p)
    throw DimensionError("state: variances size does not match p");
  if (factors.size() != q * n)
    throw DimensionError("state: factors size does not match q * n");
}

std::size_t free_loadings(std::size_t p, std::size_t q) {
  return p * q - q * (q - 1) / 2;
}

std::size_t count_free_parameters(std::size_t p, std::size_t q) {
  if (q > p)
    throw ValidationError("count_free_parameters: q=" + std::to_string(q) +
                          " exceeds p=" + std::to_string(p));
  return p * (q + 1) - q * (q - 1) / 2;
}

std::size_t max_factors(std::size_t p) {
  std::size_t best = 0;
  const auto total = static_cast<long long>(p * (p + 1) / 2);
  for (std::size_t q = 1; q <= p; ++q) {
    const auto used = static_cast<long long>(p * (q + 1)) -
                      static_cast<long long>(q * (q - 1) / 2);
    if (total - used >= 0) best = q;
  }
  return best;
}

}  // namespace polyfa
