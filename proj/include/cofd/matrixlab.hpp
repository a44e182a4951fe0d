#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cofd::matrixlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Relative singular-value threshold used by every rank decision in the
// library.
inline constexpr double kRankTolerance = 1e-9;

// Selection of column positions (1-based) out of a domain {1..r}.
//
// Indices produced by enumeration are strictly increasing. Explicit bank
// designs may carry an arbitrary order ("ordered" multi-indices); the order
// then fixes which output direction each column is mapped onto.
class MultiIndex {
 public:
  MultiIndex() = default;

  // Strictly increasing indices in [1, domain].
  static MultiIndex increasing(std::vector<int> indices, int domain);
  // Distinct indices in [1, domain], order preserved.
  static MultiIndex ordered(std::vector<int> indices, int domain);

  int length() const noexcept { return static_cast<int>(indices_.size()); }
  int domain() const noexcept { return domain_; }
  bool is_increasing() const noexcept;
  int operator[](int position) const { return indices_.at(static_cast<std::size_t>(position)); }
  const std::vector<int>& indices() const noexcept { return indices_; }
  bool contains(int index) const noexcept;
  // Position (0-based) of a column index, or -1.
  int position_of(int index) const noexcept;

  std::string to_string() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  MultiIndex(std::vector<int> indices, int domain) : indices_(std::move(indices)), domain_(domain) {}

  std::vector<int> indices_;
  int domain_ = 0;
};

struct RankReport {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  int rank = 0;
  double tolerance = kRankTolerance;
};

// X = G^T (G G^T)^{-1}, so that G X = I. Requires full row rank.
Matrix right_pseudo_inverse(const Matrix& g, double tol = kRankTolerance);

// X = (M^T M)^{-1} M^T, so that X M = I. Requires full column rank.
Matrix left_pseudo_inverse(const Matrix& m, double tol = kRankTolerance);

// All C(domain, length) increasing multi-indices in lexicographic order.
std::vector<MultiIndex> enumerate_multi_indices(int length, int domain);

std::uint64_t binomial(int n, int k);

// Counts singular values above tol * sigma_max.
RankReport numerical_rank(const Matrix& m, double tol = kRankTolerance);

// Largest l such that every l-column subset of w is numerically full rank.
// Columns are normalized to unit length first.
int uniform_sub_rank(const Matrix& w, double tol = kRankTolerance);

bool is_hurwitz(const Matrix& f, double margin = 0.0);

// Largest real part of the spectrum.
double spectral_abscissa(const Matrix& f);

Eigen::VectorXcd eigenvalues(const Matrix& f);

// W_J: the columns of w listed in j, in the order of j.
Matrix select_columns(const Matrix& w, const MultiIndex& j);

// Copy of m with every nonzero column scaled to unit Euclidean norm.
Matrix normalize_columns(const Matrix& m);

// Full column rank test on the column-normalized matrix.
bool has_full_column_rank(const Matrix& m, double tol = kRankTolerance);

double max_abs(const Matrix& m);

}  // namespace cofd::matrixlab
