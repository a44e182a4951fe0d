#include "cofd/matrixlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cofd/errors.hpp"

namespace cofd::matrixlab {

namespace {

void check_domain(const std::vector<int>& indices, int domain) {
  if (domain < 1) {
    throw Error(Errc::InvalidArgument, "multi-index domain must be positive");
  }
  if (static_cast<int>(indices.size()) > domain) {
    throw Error(Errc::InvalidArgument, "multi-index longer than its domain");
  }
  for (int i : indices) {
    if (i < 1 || i > domain) {
      throw Error(Errc::InvalidArgument,
                  "multi-index entry " + std::to_string(i) + " outside [1, " + std::to_string(domain) + "]");
    }
  }
}

}  // namespace

MultiIndex MultiIndex::increasing(std::vector<int> indices, int domain) {
  check_domain(indices, domain);
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) {
      throw Error(Errc::InvalidArgument, "multi-index entries must be strictly increasing");
    }
  }
  return MultiIndex(std::move(indices), domain);
}

MultiIndex MultiIndex::ordered(std::vector<int> indices, int domain) {
  check_domain(indices, domain);
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::InvalidArgument, "multi-index entries must be distinct");
  }
  return MultiIndex(std::move(indices), domain);
}

bool MultiIndex::is_increasing() const noexcept {
  return std::is_sorted(indices_.begin(), indices_.end());
}

bool MultiIndex::contains(int index) const noexcept { return position_of(index) >= 0; }

int MultiIndex::position_of(int index) const noexcept {
  auto it = std::find(indices_.begin(), indices_.end(), index);
  return it == indices_.end() ? -1 : static_cast<int>(it - indices_.begin());
}

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) os << ',';
    os << indices_[i];
  }
  os << ')';
  return os.str();
}

RankReport numerical_rank(const Matrix& m, double tol) {
  if (!(tol > 0.0)) {
    throw Error(Errc::InvalidArgument, "rank tolerance must be positive");
  }
  RankReport report{m.rows(), m.cols(), 0, tol};
  if (m.size() == 0) return report;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return report;
  const double threshold = tol * sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++report.rank;
  }
  return report;
}

Matrix right_pseudo_inverse(const Matrix& g, double tol) {
  const auto k = g.rows();
  if (numerical_rank(g, tol).rank < k) {
    throw Error(Errc::RankDeficient, "right pseudo-inverse needs full row rank");
  }
  // G^T = Q R  =>  G^T (G G^T)^{-1} = Q R^{-T}
  Eigen::HouseholderQR<Matrix> qr(g.transpose());
  Matrix q = qr.householderQ() * Matrix::Identity(g.cols(), k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix rinv_t = r.transpose().triangularView<Eigen::Lower>().solve(Matrix::Identity(k, k));
  return q * rinv_t;
}

Matrix left_pseudo_inverse(const Matrix& m, double tol) {
  const auto l = m.cols();
  if (numerical_rank(m, tol).rank < l) {
    throw Error(Errc::RankDeficient, "left pseudo-inverse needs full column rank");
  }
  // M = Q R  =>  (M^T M)^{-1} M^T = R^{-1} Q^T
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), l);
  Matrix r = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
  return r.triangularView<Eigen::Upper>().solve(q.transpose());
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::vector<MultiIndex> enumerate_multi_indices(int length, int domain) {
  if (length < 1 || length > domain) {
    throw Error(Errc::InvalidArgument, "need 1 <= length <= domain");
  }
  std::vector<MultiIndex> out;
  out.reserve(binomial(domain, length));
  std::vector<int> current(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) current[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    out.push_back(MultiIndex::increasing(current, domain));
    // advance to the next combination in lexicographic order
    int pos = length - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == domain - length + pos + 1) --pos;
    if (pos < 0) break;
    ++current[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < length; ++i) {
      current[static_cast<std::size_t>(i)] = current[static_cast<std::size_t>(i - 1)] + 1;
    }
  }
  return out;
}

Matrix normalize_columns(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (norm > 0.0) out.col(c) /= norm;
  }
  return out;
}

bool has_full_column_rank(const Matrix& m, double tol) {
  if (m.cols() == 0) return true;
  const double scale = m.colwise().norm().maxCoeff();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (!(m.col(c).norm() > tol * scale)) return false;
  }
  return numerical_rank(normalize_columns(m), tol).rank == m.cols();
}

int uniform_sub_rank(const Matrix& w, double tol) {
  if (w.size() == 0) return 0;
  const Eigen::VectorXd norms = w.colwise().norm();
  const double largest = norms.maxCoeff();
  if (!(largest > 0.0)) return 0;
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    if (!(norms(c) > tol * largest)) return 0;
  }
  const Matrix unit = normalize_columns(w);
  const int full_rank = numerical_rank(unit, tol).rank;
  const int m = static_cast<int>(w.cols());
  // The all-subsets property is monotone in l, so the first failing length
  // ends the search.
  int k0 = 0;
  for (int l = 1; l <= full_rank; ++l) {
    for (const auto& j : enumerate_multi_indices(l, m)) {
      if (numerical_rank(select_columns(unit, j), tol).rank < l) return k0;
    }
    k0 = l;
  }
  return k0;
}

Eigen::VectorXcd eigenvalues(const Matrix& f) {
  if (f.rows() != f.cols()) {
    throw Error(Errc::DimensionMismatch, "eigenvalues need a square matrix");
  }
  if (f.size() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(f, false);
  return solver.eigenvalues();
}

double spectral_abscissa(const Matrix& f) {
  const auto ev = eigenvalues(f);
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) worst = std::max(worst, ev(i).real());
  return worst;
}

bool is_hurwitz(const Matrix& f, double margin) {
  if (f.rows() != f.cols()) {
    throw Error(Errc::DimensionMismatch, "Hurwitz test needs a square matrix");
  }
  if (f.size() == 0) return true;
  return spectral_abscissa(f) < -margin;
}

Matrix select_columns(const Matrix& w, const MultiIndex& j) {
  Matrix out(w.rows(), j.length());
  for (int q = 0; q < j.length(); ++q) {
    const int col = j[q];
    if (col < 1 || col > w.cols()) {
      throw Error(Errc::IndexOutOfRange, "column " + std::to_string(col) + " outside matrix");
    }
    out.col(q) = w.col(col - 1);
  }
  return out;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace cofd::matrixlab
