#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "cofd/config.hpp"

namespace cofd::test {

inline std::filesystem::path source_dir() { return std::filesystem::path(COFD_SOURCE_DIR); }

inline ScenarioConfig load_example(const std::string& name) {
  return load_config(source_dir() / "configs" / (name + ".json"));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cofd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Exhaustive oracle: every l-subset of (normalized) columns is tested with a
// full-pivot LU, independent of the SVD used by the library.
inline int brute_force_sub_rank(const Eigen::MatrixXd& w, double tol = 1e-9) {
  const int m = static_cast<int>(w.cols());
  Eigen::MatrixXd normalized = w;
  for (int j = 0; j < m; ++j) {
    const double norm = w.col(j).norm();
    if (norm == 0.0) return 0;
    normalized.col(j) /= norm;
  }
  int best = 0;
  for (int l = 1; l <= std::min<int>(m, static_cast<int>(w.rows())); ++l) {
    bool all = true;
    for (unsigned mask = 0; mask < (1u << m) && all; ++mask) {
      if (__builtin_popcount(mask) != l) continue;
      Eigen::MatrixXd sub(w.rows(), l);
      int c = 0;
      for (int j = 0; j < m; ++j) {
        if (mask & (1u << j)) sub.col(c++) = normalized.col(j);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
      lu.setThreshold(tol);
      all = lu.rank() == l;
    }
    if (!all) break;
    best = l;
  }
  return best;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace cofd::test
