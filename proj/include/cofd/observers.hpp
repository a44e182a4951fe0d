#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cofd/errors.hpp"
#include "cofd/matrixlab.hpp"
#include "cofd/plant.hpp"
#include "cofd/rk4.hpp"

namespace cofd {

using matrixlab::MultiIndex;

// S with C S = I_p; its columns are the state directions whose images are
// the output basis vectors.
struct OutputSection {
  Matrix S;
  Matrix S_star;
};

// S = C^T (C C^T)^-1 + (I - C^T (C C^T)^-1 C) S_*. An empty S_* means zero.
OutputSection build_output_section(const Matrix& c, const Matrix& s_star = Matrix());

// Free parameters of one observer.
struct ObserverDesign {
  // Diagonal of the k0 x k0 eigenvalue matrix attached to the S-hat
  // directions. Must be strictly negative.
  Vector target_eigenvalues;
  // Eigenvalues placed on a complement of span(S-hat). Only honored when C is
  // square; otherwise K_* alone completes the gain.
  Vector complement_eigenvalues;
  Matrix H_star;  // n x p, empty means zero
  Matrix K_star;  // n x p, empty means zero
};

Vector default_target_eigenvalues(int k0);
Vector default_complement_eigenvalues(int count);
ObserverDesign default_design(int k0, int n);

struct UioParams {
  Matrix F;
  Matrix R;
  Matrix H;
  Matrix K1;
  Matrix K2;
  Matrix K;
  MultiIndex J;
  Matrix S_hat;
  Vector target_eigenvalues;  // diagonal of M^(h)
  Matrix H_star;
  Matrix K_star;
  Matrix W_J;  // selected columns of the design input matrix
  Matrix RB;   // R * B

  int k0() const noexcept { return J.length(); }
};

struct InvariantReport {
  double r_error = 0.0;        // |R - (I - H C)|
  double f_error = 0.0;        // |F - (R A - K1 C)|
  double k2_error = 0.0;       // |K2 - F H|
  double k_error = 0.0;        // |K - (K1 + K2)|
  double section_error = 0.0;  // |R W_J - S_hat|
  double eigen_error = 0.0;    // |F S_hat - S_hat M|
  double abscissa = 0.0;       // max Re(eig F)
  bool hurwitz = false;

  bool passes() const noexcept;
};

InvariantReport check_invariants(const LtiPlant& plant, const UioParams& params);

// Builds one constrained-output-fault-direction observer for the columns J of
// `input_matrix` (W or the cluster matrix W*).
UioParams synthesize_cofd(const LtiPlant& plant, const OutputSection& section, const Matrix& input_matrix,
                          const MultiIndex& j, const ObserverDesign& design);

enum class BankMode { Actuator, Cluster };

std::string_view to_string(BankMode mode);

struct BankRequest {
  BankMode mode = BankMode::Actuator;
  // nullopt: every multi-index of length k0 = uniform sub-rank.
  std::optional<std::vector<MultiIndex>> explicit_indices;
  std::optional<ObserverDesign> design;  // nullopt: defaults sized for k0
};

struct SynthesisFailure {
  MultiIndex J;
  Errc code;
  std::string message;
};

struct ObserverBank {
  BankMode mode = BankMode::Actuator;
  OutputSection section;
  Matrix input_matrix;
  int k0 = 0;
  std::vector<UioParams> observers;
  std::vector<SynthesisFailure> failures;

  int size() const noexcept { return static_cast<int>(observers.size()); }
};

ObserverBank build_bank(const LtiPlant& plant, const Matrix& input_matrix, const BankRequest& request,
                        const OutputSection& section);

// Runtime form of one observer in a chosen scalar type.
//
// The observer is z' = F z + R B v + K y, x_hat = z + H y. With the
// case-study scaling H, R and K are of order 1e9, so evaluating that form
// directly loses about nine digits to cancellation, and the separately rounded
// F, R and K no longer satisfy F = R A - K1 C to working precision. The kernel
// instead advances the estimate through the equivalent form
//   x_hat' = q + K1 (y - C x_hat) + H (y' - C q),   q = A x_hat + B v,
// which only involves A, B, C, H and K1. Over one step the y' term
// integrates to y1 - y0, so it needs no differentiated measurement.
template <class Scalar>
struct ObserverKernel {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat A, B, C, H, K1;

  ObserverKernel() = default;
  ObserverKernel(const UioParams& params, const LtiPlant& plant)
      : A(plant.A.cast<Scalar>()),
        B(plant.B.cast<Scalar>()),
        C(plant.C.cast<Scalar>()),
        H(params.H.cast<Scalar>()),
        K1(params.K1.cast<Scalar>()) {}

  int n() const noexcept { return static_cast<int>(A.rows()); }
  int p() const noexcept { return static_cast<int>(C.rows()); }

  // Estimate at a stage point from the step increments: `d` holds the
  // integral of q + K1 (y - C x_hat) (first n entries) and of C q (last p).
  Vec stage_estimate(const Vec& x_hat0, const Vec& d, const Vec& y0, const Vec& y) const {
    return x_hat0 + d.head(n()) + H * ((y - y0) - d.tail(p()));
  }
  Vec increment_derivative(const Vec& d, const Vec& x_hat0, const Vec& y, const Vec& y0, const Vec& v) const {
    const Vec x_hat = stage_estimate(x_hat0, d, y0, y);
    const Vec q = A * x_hat + B * v;
    Vec out(n() + p());
    out.head(n()) = q + K1 * (y - C * x_hat);
    out.tail(p()) = C * q;
    return out;
  }
  Vec finish_step(const Vec& x_hat0, const Vec& d, const Vec& y0, const Vec& y1) const {
    return stage_estimate(x_hat0, d, y0, y1);
  }
  Vec residual(const Vec& x_hat, const Vec& y) const { return y - C * x_hat; }
  // Zero estimation error when C is invertible.
  Vec initial_estimate(const Mat& section, const Vec& y) const { return section * y; }
  Vec internal_state(const Vec& x_hat, const Vec& y) const { return x_hat - H * y; }

  // One RK4 step with y sampled at the four stage points of the driving
  // plant step; y_next is the measurement at the end of the step.
  Vec step(const Vec& x_hat, const std::array<Vec, 4>& stage_outputs, const Vec& y_next, const Vec& v,
           double dt) const {
    int stage = 0;
    const Vec& y0 = stage_outputs[0];
    auto f = [&](double, const Vec& d) {
      // rk4_step evaluates the stages in order 0..3
      return increment_derivative(d, x_hat, stage_outputs[static_cast<std::size_t>(stage++)], y0, v);
    };
    const Vec d = rk4_step(f, Vec(Vec::Zero(n() + p())), 0.0, dt);
    return finish_step(x_hat, d, y0, y_next);
  }
};

struct ObserverStep {
  Vector x_hat;
  Vector r;
  Vector z;  // x_hat - H y, for reference
};

// Advances one observer from its current estimate; y_next is the
// measurement at the end of the step.
ObserverStep step_observer(const UioParams& params, const LtiPlant& plant, const Vector& x_hat,
                           const std::array<Vector, 4>& stage_outputs, const Vector& y_next, const Vector& v,
                           double dt);

// Same with the measurement held constant over the step.
ObserverStep step_observer(const UioParams& params, const LtiPlant& plant, const Vector& x_hat, const Vector& y,
                           const Vector& v, double dt);

}  // namespace cofd
