#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "polyfa/core.hpp"
#include "polyfa/numeric.hpp"

namespace testing {

using Cuts = std::vector<std::vector<double>>;

// The 5-variable one-factor truth used throughout the recovery studies.
inline polyfa::ParameterState one_factor_truth() {
  auto t = polyfa::ParameterState::zeros(5, 1, 0, 1, true);
  t.loadings = {0.99, 0.80, 0.90, 0.70, 0.50};
  t.variances = {0.01, 0.05, 0.10, 0.15, 0.20};
  return t;
}

inline polyfa::CategoricalDataset make_data(std::size_t n, std::size_t p, int k,
                                            const std::vector<int>& rows) {
  return polyfa::CategoricalDataset(n, p, std::vector<int>(p, k), rows);
}

// Random valid dataset: the first k rows cycle through every category.
inline polyfa::CategoricalDataset random_data(std::size_t n, std::size_t p, int k,
                                              std::uint64_t seed) {
  polyfa::Rng rng(seed);
  std::vector<int> v(n * p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      v[i * p + j] = i < static_cast<std::size_t>(k)
                         ? static_cast<int>(i) + 1
                         : 1 + static_cast<int>(rng.uniform() * k) % k;
  return make_data(n, p, k, v);
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("polyfa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
