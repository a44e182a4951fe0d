#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cofd/matrixlab.hpp"

namespace cofd {

using matrixlab::Matrix;
using matrixlab::Vector;

// x' = A x + B tau,  y = C x,  tau = G Delta u.
struct LtiPlant {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix G;
  Matrix W;  // B * G

  int n() const noexcept { return static_cast<int>(A.rows()); }
  int k() const noexcept { return static_cast<int>(B.cols()); }
  int m() const noexcept { return static_cast<int>(G.cols()); }
  int p() const noexcept { return static_cast<int>(C.rows()); }

  // Validates dimensions and the full-rank requirements on B, C and G.
  static LtiPlant make(Matrix a, Matrix b, Matrix c, Matrix g);
};

// Partition of the actuator indices {1..m} into contiguous groups. Each group
// is one effector (thruster) or one common-mode cluster.
class ClusterSpec {
 public:
  ClusterSpec() = default;

  static ClusterSpec from_groups(std::vector<std::vector<int>> groups,
                                 std::vector<std::string> names = {});
  static ClusterSpec singletons(int m);

  int q() const noexcept { return static_cast<int>(groups_.size()); }
  int m() const noexcept { return m_; }
  // h is 1-based.
  const std::vector<int>& group(int h) const { return groups_.at(static_cast<std::size_t>(h - 1)); }
  int cardinality(int h) const { return static_cast<int>(group(h).size()); }
  const std::string& name(int h) const { return names_.at(static_cast<std::size_t>(h - 1)); }
  // Cluster (1-based) holding actuator index i, or 0.
  int cluster_of(int index) const;
  // Cluster id for a name, or 0.
  int find(std::string_view name) const;
  bool all_singletons() const;

  const std::vector<std::vector<int>>& groups() const noexcept { return groups_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::vector<int>> groups_;
  std::vector<std::string> names_;
  int m_ = 0;
};

// Effectiveness after fault onset, evaluated on the time elapsed since onset
// and clamped to [0, 1].
struct Effectiveness {
  enum class Kind { Constant, Exponential, Ramp };

  Kind kind = Kind::Constant;
  // Constant: the level. Exponential: decay rate (1/s). Ramp: slope (1/s).
  double parameter = 1.0;

  double evaluate(double elapsed) const;

  static Effectiveness constant(double level) { return {Kind::Constant, level}; }
  static Effectiveness exponential(double rate) { return {Kind::Exponential, rate}; }
  static Effectiveness ramp(double slope) { return {Kind::Ramp, slope}; }
};

std::string_view to_string(Effectiveness::Kind kind);
Effectiveness::Kind effectiveness_kind_from_string(std::string_view name);

struct FaultEntry {
  int target = 1;  // actuator index or cluster id, 1-based
  Effectiveness effect;
  double onset = 0.0;

  double delta(double t) const;
};

struct FaultProfile {
  enum class Mode { PerActuator, PerCluster };

  Mode mode = Mode::PerActuator;
  std::vector<FaultEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
};

// Diagonal Delta(t). Untargeted entries are exactly 1; in cluster mode every
// member of a targeted cluster carries the cluster's effectiveness.
Eigen::DiagonalMatrix<double, Eigen::Dynamic> fault_matrix(const FaultProfile& profile, int m,
                                                           const ClusterSpec* clusters, double t);

// A x + B G Delta u + disturbance.
Vector plant_derivative(const LtiPlant& plant, const Vector& x, const Vector& u,
                        const Eigen::DiagonalMatrix<double, Eigen::Dynamic>& delta,
                        const Vector& disturbance_effect);

// Three azimuth thrusters (two force channels each) and two tunnel thrusters.
struct VesselParams {
  double mass = 6e6;
  double length = 76.0;
  double width = 16.0;
  Eigen::Matrix3d inertia;
  Eigen::Matrix3d damping;
  std::array<double, 5> distances{};
  std::array<double, 5> angles{};
  double reference_heading = 0.0;
  double disturbance_bound = 5e6;

  // Published 76 m / 6000 t supply vessel configuration.
  static VesselParams reference();
};

Eigen::Matrix3d heading_rotation(double psi);

// 3x8 allocation matrix built from the thruster geometry.
Matrix vessel_allocation_matrix(const VesselParams& params);

// A = [0 P; 0 -M^-1 D], B = [0; M^-1], C = I6.
LtiPlant build_vessel_plant(const VesselParams& params);

// T1 <-> {1,2}, T2 <-> {3,4}, T3 <-> {5,6}, T4 <-> {7}, T5 <-> {8}.
ClusterSpec vessel_thruster_clusters();

// 6x3 map from the environmental load b(t) to the state derivative,
// [0; M^-1 P^T(psi_ref)].
Matrix vessel_disturbance_input(const VesselParams& params);

}  // namespace cofd
