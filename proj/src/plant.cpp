#include "cofd/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cofd/errors.hpp"

namespace cofd {

using matrixlab::numerical_rank;

LtiPlant LtiPlant::make(Matrix a, Matrix b, Matrix c, Matrix g) {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n || g.rows() != b.cols()) {
    throw Error(Errc::DimensionMismatch, "plant matrices have inconsistent shapes");
  }
  if (g.cols() < g.rows()) {
    throw Error(Errc::InvalidArgument, "allocation matrix needs at least as many inputs as effects");
  }
  if (numerical_rank(b).rank != b.cols()) {
    throw Error(Errc::RankDeficient, "B must have full column rank");
  }
  if (numerical_rank(c).rank != c.rows()) {
    throw Error(Errc::RankDeficient, "C must have full row rank");
  }
  if (numerical_rank(g).rank != g.rows()) {
    throw Error(Errc::RankDeficient, "G must have full row rank");
  }
  LtiPlant plant;
  plant.A = std::move(a);
  plant.B = std::move(b);
  plant.C = std::move(c);
  plant.G = std::move(g);
  plant.W = plant.B * plant.G;
  return plant;
}

ClusterSpec ClusterSpec::from_groups(std::vector<std::vector<int>> groups, std::vector<std::string> names) {
  ClusterSpec spec;
  int expected = 1;
  for (const auto& group : groups) {
    if (group.empty()) {
      throw Error(Errc::InvalidArgument, "empty actuator cluster");
    }
    for (int index : group) {
      if (index != expected) {
        throw Error(Errc::InvalidArgument, "clusters must partition 1..m into contiguous groups");
      }
      ++expected;
    }
  }
  spec.m_ = expected - 1;
  if (names.empty()) {
    for (std::size_t h = 0; h < groups.size(); ++h) names.push_back("A" + std::to_string(h + 1));
  }
  if (names.size() != groups.size()) {
    throw Error(Errc::InvalidArgument, "cluster names do not match cluster count");
  }
  spec.groups_ = std::move(groups);
  spec.names_ = std::move(names);
  return spec;
}

ClusterSpec ClusterSpec::singletons(int m) {
  std::vector<std::vector<int>> groups;
  std::vector<std::string> names;
  for (int i = 1; i <= m; ++i) {
    groups.push_back({i});
    names.push_back("u" + std::to_string(i));
  }
  return from_groups(std::move(groups), std::move(names));
}

int ClusterSpec::cluster_of(int index) const {
  for (std::size_t h = 0; h < groups_.size(); ++h) {
    if (std::find(groups_[h].begin(), groups_[h].end(), index) != groups_[h].end()) {
      return static_cast<int>(h + 1);
    }
  }
  return 0;
}

int ClusterSpec::find(std::string_view name) const {
  for (std::size_t h = 0; h < names_.size(); ++h) {
    if (names_[h] == name) return static_cast<int>(h + 1);
  }
  return 0;
}

bool ClusterSpec::all_singletons() const {
  return std::all_of(groups_.begin(), groups_.end(), [](const auto& g) { return g.size() == 1; });
}

double Effectiveness::evaluate(double elapsed) const {
  double value = 1.0;
  switch (kind) {
    case Kind::Constant: value = parameter; break;
    case Kind::Exponential: value = std::exp(-parameter * elapsed); break;
    case Kind::Ramp: value = 1.0 - parameter * elapsed; break;
  }
  return std::clamp(value, 0.0, 1.0);
}

std::string_view to_string(Effectiveness::Kind kind) {
  switch (kind) {
    case Effectiveness::Kind::Constant: return "constant";
    case Effectiveness::Kind::Exponential: return "exponential";
    case Effectiveness::Kind::Ramp: return "ramp";
  }
  return "constant";
}

Effectiveness::Kind effectiveness_kind_from_string(std::string_view name) {
  if (name == "constant") return Effectiveness::Kind::Constant;
  if (name == "exponential") return Effectiveness::Kind::Exponential;
  if (name == "ramp") return Effectiveness::Kind::Ramp;
  throw Error(Errc::InvalidArgument, "unknown effectiveness kind '" + std::string(name) + "'");
}

double FaultEntry::delta(double t) const { return t < onset ? 1.0 : effect.evaluate(t - onset); }

Eigen::DiagonalMatrix<double, Eigen::Dynamic> fault_matrix(const FaultProfile& profile, int m,
                                                           const ClusterSpec* clusters, double t) {
  if (t < 0.0) {
    throw Error(Errc::InvalidArgument, "fault matrix evaluated at negative time");
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(m);
  for (const auto& entry : profile.entries) {
    const double d = entry.delta(t);
    if (profile.mode == FaultProfile::Mode::PerActuator) {
      if (entry.target < 1 || entry.target > m) {
        throw Error(Errc::IndexOutOfRange, "fault targets actuator " + std::to_string(entry.target));
      }
      diag(entry.target - 1) *= d;
    } else {
      if (clusters == nullptr || entry.target < 1 || entry.target > clusters->q()) {
        throw Error(Errc::IndexOutOfRange, "fault targets unknown cluster " + std::to_string(entry.target));
      }
      for (int index : clusters->group(entry.target)) {
        if (index > m) {
          throw Error(Errc::IndexOutOfRange, "cluster member outside actuator range");
        }
        diag(index - 1) *= d;
      }
    }
  }
  return Eigen::DiagonalMatrix<double, Eigen::Dynamic>(diag);
}

Vector plant_derivative(const LtiPlant& plant, const Vector& x, const Vector& u,
                        const Eigen::DiagonalMatrix<double, Eigen::Dynamic>& delta,
                        const Vector& disturbance_effect) {
  if (x.size() != plant.n() || u.size() != plant.m() || delta.rows() != plant.m() ||
      disturbance_effect.size() != plant.n()) {
    throw Error(Errc::DimensionMismatch, "plant derivative arguments have wrong sizes");
  }
  return plant.A * x + plant.W * (delta * u) + disturbance_effect;
}

VesselParams VesselParams::reference() {
  VesselParams p;
  p.inertia << 0.0068, 0.0, 0.0,
               0.0, 0.0113, -0.0340,
               0.0, -0.0340, 4.4524;
  p.inertia *= 1e9;
  p.damping << 0.0008, 0.0, 0.0,
               0.0, 0.0025, -0.0203,
               0.0, -0.0340, 3.8481;
  p.damping *= 1e8;
  p.distances = {20.0, 20.0, 18.5, 30.0, 35.0};
  // Only the first two angles are published; the rest reproduce the printed
  // moment arms (0, 18.5, 30, 35).
  p.angles = {std::numbers::pi + 0.3, std::numbers::pi - 0.3, 0.0, 0.0, 0.0};
  return p;
}

Eigen::Matrix3d heading_rotation(double psi) {
  Eigen::Matrix3d p;
  p << std::cos(psi), -std::sin(psi), 0.0,
       std::sin(psi), std::cos(psi), 0.0,
       0.0, 0.0, 1.0;
  return p;
}

Matrix vessel_allocation_matrix(const VesselParams& params) {
  Matrix g = Matrix::Zero(3, 8);
  for (int s = 0; s < 3; ++s) {
    const double d = params.distances[static_cast<std::size_t>(s)];
    const double phi = params.angles[static_cast<std::size_t>(s)];
    g(0, 2 * s) = 1.0;
    g(1, 2 * s + 1) = 1.0;
    g(2, 2 * s) = d * std::sin(phi);
    g(2, 2 * s + 1) = d * std::cos(phi);
  }
  for (int s = 3; s < 5; ++s) {
    g(1, s + 3) = 1.0;
    g(2, s + 3) = params.distances[static_cast<std::size_t>(s)] * std::cos(params.angles[static_cast<std::size_t>(s)]);
  }
  return g;
}

namespace {

Eigen::Matrix3d checked_inverse_inertia(const VesselParams& params) {
  const Eigen::Matrix3d& m = params.inertia;
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * m.cwiseAbs().maxCoeff()) {
    throw Error(Errc::InvalidArgument, "inertia matrix must be finite and symmetric");
  }
  Eigen::LLT<Eigen::Matrix3d> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::SingularInertia, "inertia matrix is not positive definite");
  }
  return llt.solve(Eigen::Matrix3d::Identity());
}

}  // namespace

LtiPlant build_vessel_plant(const VesselParams& params) {
  if (params.disturbance_bound < 0.0) {
    throw Error(Errc::InvalidArgument, "disturbance bound must be non-negative");
  }
  const Eigen::Matrix3d m_inv = checked_inverse_inertia(params);
  Matrix a = Matrix::Zero(6, 6);
  a.topRightCorner(3, 3) = heading_rotation(params.reference_heading);
  a.bottomRightCorner(3, 3) = -m_inv * params.damping;
  Matrix b = Matrix::Zero(6, 3);
  b.bottomRows(3) = m_inv;
  return LtiPlant::make(std::move(a), std::move(b), Matrix::Identity(6, 6), vessel_allocation_matrix(params));
}

ClusterSpec vessel_thruster_clusters() {
  return ClusterSpec::from_groups({{1, 2}, {3, 4}, {5, 6}, {7}, {8}}, {"T1", "T2", "T3", "T4", "T5"});
}

Matrix vessel_disturbance_input(const VesselParams& params) {
  const Eigen::Matrix3d m_inv = checked_inverse_inertia(params);
  Matrix e = Matrix::Zero(6, 3);
  e.bottomRows(3) = m_inv * heading_rotation(params.reference_heading).transpose();
  return e;
}

}  // namespace cofd
