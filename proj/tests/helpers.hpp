#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "dfs/sparse_system.hpp"

namespace dfs::testing {

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

/// Dense random rows with ~`density` nonzeros, rhs = A * x_star.
inline ConstraintSystem random_consistent_system(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                                 std::vector<double>* x_star_out = nullptr,
                                                 double density = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<double> x_star(cols);
  for (auto& v : x_star) v = coef(rng);
  std::vector<SparseRow> r;
  std::vector<double> h;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<SparseEntry> e;
    for (std::size_t j = 0; j < cols; ++j)
      if (coin(rng) < density) e.push_back({static_cast<std::uint32_t>(j), coef(rng)});
    if (e.empty()) e.push_back({static_cast<std::uint32_t>(i % cols), 1.0});
    SparseRow row(e);
    h.push_back(row.dot(x_star));
    r.push_back(std::move(row));
  }
  if (x_star_out) *x_star_out = x_star;
  return build_system(std::move(r), std::move(h), cols);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dfs-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dfs::testing
