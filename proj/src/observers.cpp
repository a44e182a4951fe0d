#include "cofd/observers.hpp"

#include <algorithm>
#include <cmath>

namespace cofd {

using matrixlab::has_full_column_rank;
using matrixlab::left_pseudo_inverse;
using matrixlab::max_abs;

OutputSection build_output_section(const Matrix& c, const Matrix& s_star) {
  const auto p = c.rows();
  const auto n = c.cols();
  Matrix free_part = s_star.size() == 0 ? Matrix::Zero(n, p) : s_star;
  if (free_part.rows() != n || free_part.cols() != p) {
    throw Error(Errc::DimensionMismatch, "S_* must be n x p");
  }
  const Matrix c_pinv = matrixlab::right_pseudo_inverse(c);
  OutputSection section;
  section.S = c_pinv + (Matrix::Identity(n, n) - c_pinv * c) * free_part;
  section.S_star = free_part;
  return section;
}

Vector default_target_eigenvalues(int k0) {
  Vector values(k0);
  for (int i = 0; i < k0; ++i) values(i) = -1.0 - static_cast<double>(i / 2);
  return values;
}

Vector default_complement_eigenvalues(int count) {
  Vector values(count);
  for (int i = 0; i < count; ++i) values(i) = -5.0 - static_cast<double>(i);
  return values;
}

ObserverDesign default_design(int k0, int n) {
  ObserverDesign design;
  design.target_eigenvalues = default_target_eigenvalues(k0);
  design.complement_eigenvalues = default_complement_eigenvalues(std::max(0, n - k0));
  return design;
}

bool InvariantReport::passes() const noexcept {
  return r_error <= 1e-12 && f_error <= 1e-10 && k2_error <= 1e-10 && k_error <= 1e-10 && section_error <= 1e-8 &&
         eigen_error <= 1e-8 && hurwitz;
}

InvariantReport check_invariants(const LtiPlant& plant, const UioParams& params) {
  const auto n = plant.n();
  InvariantReport report;
  report.r_error = max_abs(params.R - (Matrix::Identity(n, n) - params.H * plant.C));
  report.f_error = max_abs(params.F - (params.R * plant.A - params.K1 * plant.C));
  report.k2_error = max_abs(params.K2 - params.F * params.H);
  report.k_error = max_abs(params.K - (params.K1 + params.K2));
  report.section_error = max_abs(params.R * params.W_J - params.S_hat);
  report.eigen_error =
      max_abs(params.F * params.S_hat - params.S_hat * params.target_eigenvalues.asDiagonal().toDenseMatrix());
  report.abscissa = matrixlab::spectral_abscissa(params.F);
  report.hurwitz = report.abscissa < 0.0;
  return report;
}

namespace {

// Columns of S-hat followed by canonical vectors that keep the set
// independent, until the basis spans the state space.
Matrix complete_basis(const Matrix& s_hat) {
  const auto n = s_hat.rows();
  Matrix basis = s_hat;
  for (Eigen::Index i = 0; i < n && basis.cols() < n; ++i) {
    Matrix candidate(n, basis.cols() + 1);
    candidate << basis, Matrix::Identity(n, n).col(i);
    if (has_full_column_rank(candidate)) basis = std::move(candidate);
  }
  return basis;
}

Matrix checked_or_zero(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.size() == 0) return Matrix::Zero(rows, cols);
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(Errc::DimensionMismatch, std::string(name) + " has the wrong shape");
  }
  return m;
}

}  // namespace

UioParams synthesize_cofd(const LtiPlant& plant, const OutputSection& section, const Matrix& input_matrix,
                          const MultiIndex& j, const ObserverDesign& design) {
  const auto n = plant.n();
  const auto p = plant.p();
  const int k0 = j.length();
  if (input_matrix.rows() != n) {
    throw Error(Errc::DimensionMismatch, "input matrix must have n rows");
  }
  if (section.S.rows() != n || section.S.cols() != p) {
    throw Error(Errc::DimensionMismatch, "output section must be n x p");
  }
  if (k0 < 1 || k0 > p) {
    throw Error(Errc::InvalidArgument, "multi-index length must lie in [1, p]");
  }
  if (design.target_eigenvalues.size() != k0) {
    throw Error(Errc::InvalidArgument, "need one target eigenvalue per selected column");
  }
  if ((design.target_eigenvalues.array() >= 0.0).any()) {
    throw Error(Errc::InvalidArgument, "target eigenvalues must be strictly negative");
  }

  UioParams obs;
  obs.J = j;
  obs.W_J = matrixlab::select_columns(input_matrix, j);
  const Matrix cw = plant.C * obs.W_J;
  if (!has_full_column_rank(obs.W_J) || !has_full_column_rank(cw)) {
    throw Error(Errc::RankConditionFailed, "columns " + j.to_string() + " are not independent (rank(W_J) or rank(C W_J) < " +
                                               std::to_string(k0) + ")");
  }
  obs.S_hat = section.S.leftCols(k0);
  obs.target_eigenvalues = design.target_eigenvalues;
  obs.H_star = checked_or_zero(design.H_star, n, p, "H_*");
  obs.K_star = checked_or_zero(design.K_star, n, p, "K_*");

  const Matrix cw_left = left_pseudo_inverse(cw);
  const Matrix eye_p = Matrix::Identity(p, p);
  obs.H = (obs.W_J - obs.S_hat) * cw_left + obs.H_star * (eye_p - cw * cw_left);
  obs.R = Matrix::Identity(n, n) - obs.H * plant.C;
  const Matrix ra = obs.R * plant.A;
  const Matrix diag_m = design.target_eigenvalues.asDiagonal().toDenseMatrix();

  const bool place_complement = plant.C.rows() == plant.C.cols() && design.complement_eigenvalues.size() > 0;
  if (place_complement) {
    if (design.complement_eigenvalues.size() != n - k0) {
      throw Error(Errc::InvalidArgument, "need n - k0 complement eigenvalues");
    }
    const Matrix basis = complete_basis(obs.S_hat);
    Vector spectrum(n);
    spectrum << design.target_eigenvalues, design.complement_eigenvalues;
    const Matrix target = basis * spectrum.asDiagonal() * basis.inverse();
    const Matrix rhs = ra - target;
    if (plant.C.isIdentity(0.0)) {
      obs.K1 = rhs;
    } else {
      obs.K1 = plant.C.transpose().fullPivLu().solve(rhs.transpose()).transpose();
    }
    // Report the equivalent free parameter of the general gain formula.
    obs.K_star = obs.K1;
  } else {
    const Matrix cs = plant.C * obs.S_hat;
    const Matrix cs_left = left_pseudo_inverse(cs);
    obs.K1 = (ra * obs.S_hat - obs.S_hat * diag_m) * cs_left + obs.K_star * (eye_p - cs * cs_left);
  }
  obs.F = ra - obs.K1 * plant.C;
  obs.K2 = obs.F * obs.H;
  obs.K = obs.K1 + obs.K2;
  obs.RB = obs.R * plant.B;

  const InvariantReport report = check_invariants(plant, obs);
  if (!report.hurwitz) {
    throw Error(Errc::NotHurwitz, "observer " + j.to_string() + " has spectral abscissa " +
                                      std::to_string(report.abscissa) + "; retune the free parameters");
  }
  if (!report.passes()) {
    throw Error(Errc::RankConditionFailed, "observer " + j.to_string() + " misses its algebraic conditions numerically");
  }
  return obs;
}

std::string_view to_string(BankMode mode) { return mode == BankMode::Actuator ? "actuator" : "cluster"; }

ObserverBank build_bank(const LtiPlant& plant, const Matrix& input_matrix, const BankRequest& request,
                        const OutputSection& section) {
  ObserverBank bank;
  bank.mode = request.mode;
  bank.section = section;
  bank.input_matrix = input_matrix;

  std::vector<MultiIndex> indices;
  if (request.explicit_indices) {
    indices = *request.explicit_indices;
    if (indices.empty()) throw Error(Errc::EmptyBank, "explicit multi-index list is empty");
    bank.k0 = indices.front().length();
    for (std::size_t a = 0; a < indices.size(); ++a) {
      if (indices[a].length() != bank.k0) {
        throw Error(Errc::InvalidArgument, "explicit multi-indices must share one length");
      }
      if (indices[a].domain() != input_matrix.cols()) {
        throw Error(Errc::InvalidArgument, "multi-index domain does not match the input matrix");
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (indices[a] == indices[b]) {
          throw Error(Errc::InvalidArgument, "duplicate multi-index " + indices[a].to_string());
        }
      }
    }
  } else {
    bank.k0 = matrixlab::uniform_sub_rank(input_matrix);
    if (bank.k0 < 1) throw Error(Errc::EmptyBank, "input matrix has uniform sub-rank 0");
    bank.k0 = std::min(bank.k0, plant.p());
    indices = matrixlab::enumerate_multi_indices(bank.k0, static_cast<int>(input_matrix.cols()));
  }

  const ObserverDesign design = request.design ? *request.design : default_design(bank.k0, plant.n());
  for (const auto& j : indices) {
    try {
      bank.observers.push_back(synthesize_cofd(plant, section, input_matrix, j, design));
    } catch (const Error& e) {
      bank.failures.push_back({j, e.code(), e.detail()});
    }
  }
  if (bank.observers.empty()) {
    throw Error(Errc::EmptyBank, "no multi-index yields a valid observer");
  }
  return bank;
}

ObserverStep step_observer(const UioParams& params, const LtiPlant& plant, const Vector& x_hat,
                           const std::array<Vector, 4>& stage_outputs, const Vector& y_next, const Vector& v,
                           double dt) {
  // Extended precision keeps the H (y1 - y0) cancellation below 1e-9.
  using Kernel = ObserverKernel<long double>;
  const Kernel kernel(params, plant);
  std::array<Kernel::Vec, 4> ys;
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = stage_outputs[i].cast<long double>();
  const Kernel::Vec y1 = y_next.cast<long double>();
  const Kernel::Vec next = kernel.step(x_hat.cast<long double>(), ys, y1, v.cast<long double>(), dt);
  ObserverStep out;
  out.x_hat = next.cast<double>();
  out.r = kernel.residual(next, y1).cast<double>();
  out.z = kernel.internal_state(next, y1).cast<double>();
  return out;
}

ObserverStep step_observer(const UioParams& params, const LtiPlant& plant, const Vector& x_hat, const Vector& y,
                           const Vector& v, double dt) {
  return step_observer(params, plant, x_hat, {y, y, y, y}, y, v, dt);
}

}  // namespace cofd
