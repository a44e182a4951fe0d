#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cofd/allocation.hpp"
#include "cofd/errors.hpp"
#include "cofd/plant.hpp"

namespace {

using namespace cofd;
using matrixlab::max_abs;

TEST(VesselPlant, AllocationGeometry) {
  const Matrix g = vessel_allocation_matrix(VesselParams::reference());
  ASSERT_EQ(g.rows(), 3);
  ASSERT_EQ(g.cols(), 8);
  const double expected_row3[] = {-5.91, -19.1, 5.91, -19.1, 0.0, 18.5, 30.0, 35.0};
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(g(2, j), expected_row3[j], 0.01) << "column " << j + 1;
  const double surge[] = {1, 0, 1, 0, 1, 0, 0, 0};
  const double sway[] = {0, 1, 0, 1, 0, 1, 1, 1};
  for (int j = 0; j < 8; ++j) {
    EXPECT_EQ(g(0, j), surge[j]);
    EXPECT_EQ(g(1, j), sway[j]);
  }
}

TEST(VesselPlant, TrivialGeometry) {
  VesselParams p = VesselParams::reference();
  p.distances = {1, 1, 1, 1, 1};
  p.angles = {0, 0, 0, 0, 0};
  const Matrix g = vessel_allocation_matrix(p);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(g(2, 2 * s), 0.0);
    EXPECT_EQ(g(2, 2 * s + 1), 1.0);
  }
}

TEST(VesselPlant, StateSpaceStructure) {
  const VesselParams params = VesselParams::reference();
  const LtiPlant plant = build_vessel_plant(params);
  EXPECT_EQ(plant.n(), 6);
  EXPECT_EQ(plant.k(), 3);
  EXPECT_EQ(plant.m(), 8);
  EXPECT_EQ(plant.p(), 6);
  EXPECT_EQ(max_abs(plant.A.topLeftCorner(3, 3)), 0.0);
  EXPECT_EQ(max_abs(plant.A.topRightCorner(3, 3) - Matrix::Identity(3, 3)), 0.0);
  const Eigen::Matrix3d m_inv = params.inertia.inverse();
  EXPECT_LT(max_abs(plant.A.bottomRightCorner(3, 3) + m_inv * params.damping), 1e-12);
  EXPECT_LT(max_abs(plant.B.bottomRows(3) - m_inv), 1e-15);
  EXPECT_EQ(max_abs(plant.W - plant.B * plant.G), 0.0);
}

TEST(VesselPlant, DuplicateInputColumns) {
  // G columns 2 and 4 coincide to the printed precision, so W_2 and W_4 agree
  // up to rounding in the trigonometric terms.
  const LtiPlant plant = build_vessel_plant(VesselParams::reference());
  const double scale = plant.W.col(1).norm();
  EXPECT_LT((plant.W.col(1) - plant.W.col(3)).norm(), 1e-12 * scale);
}

TEST(VesselPlant, SingularInertia) {
  VesselParams p = VesselParams::reference();
  p.inertia.setZero();
  try {
    build_vessel_plant(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularInertia);
  }
}

TEST(LtiPlant, RejectsBadShapesAndRanks) {
  EXPECT_THROW(LtiPlant::make(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Identity(3, 3),
                              Matrix::Identity(2, 2)),
               Error);
  Matrix b = Matrix::Zero(3, 2);
  b(0, 0) = 1.0;
  b(1, 0) = 1.0;
  try {
    LtiPlant::make(Matrix::Identity(3, 3), b, Matrix::Identity(3, 3), Matrix::Identity(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficient);
  }
}

TEST(Clusters, VesselPartition) {
  const ClusterSpec c = vessel_thruster_clusters();
  EXPECT_EQ(c.q(), 5);
  EXPECT_EQ(c.m(), 8);
  EXPECT_EQ(c.cluster_of(4), 2);
  EXPECT_EQ(c.cluster_of(8), 5);
  EXPECT_EQ(c.find("T3"), 3);
  EXPECT_EQ(c.find("T9"), 0);
  EXPECT_FALSE(c.all_singletons());
  EXPECT_TRUE(ClusterSpec::singletons(4).all_singletons());
  EXPECT_THROW(ClusterSpec::from_groups({{1}, {3}}), Error);
}

TEST(FaultMatrix, EmptyProfileIsIdentity) {
  const FaultProfile empty;
  for (double t : {0.0, 1.0, 1e3}) {
    const Matrix d = fault_matrix(empty, 8, nullptr, t).toDenseMatrix();
    EXPECT_EQ(max_abs(d - Matrix::Identity(8, 8)), 0.0);
  }
}

TEST(FaultMatrix, ExponentialThrusterFault) {
  const ClusterSpec clusters = vessel_thruster_clusters();
  FaultProfile profile;
  profile.mode = FaultProfile::Mode::PerCluster;
  profile.entries.push_back({1, Effectiveness::exponential(0.03), 0.0});
  const Vector at0 = fault_matrix(profile, 8, &clusters, 0.0).diagonal();
  EXPECT_EQ(max_abs(at0 - Vector::Ones(8)), 0.0);
  const Vector late = fault_matrix(profile, 8, &clusters, 2000.0).diagonal();
  EXPECT_LT(late(0), 1e-20);
  EXPECT_LT(late(1), 1e-20);
  EXPECT_EQ(max_abs(late.tail(6) - Vector::Ones(6)), 0.0);
  EXPECT_NEAR(fault_matrix(profile, 8, &clusters, 10.0).diagonal()(0), std::exp(-0.3), 1e-15);
}

TEST(FaultMatrix, ClusterConstantAndOnset) {
  const ClusterSpec clusters = vessel_thruster_clusters();
  FaultProfile profile;
  profile.mode = FaultProfile::Mode::PerCluster;
  profile.entries.push_back({2, Effectiveness::constant(0.5), 5.0});
  EXPECT_EQ(max_abs(fault_matrix(profile, 8, &clusters, 4.99).diagonal() - Vector::Ones(8)), 0.0);
  Vector expected = Vector::Ones(8);
  expected(2) = expected(3) = 0.5;
  EXPECT_EQ(max_abs(fault_matrix(profile, 8, &clusters, 5.0).diagonal() - expected), 0.0);
}

TEST(FaultMatrix, BoundsAndErrors) {
  FaultProfile ramp;
  ramp.entries.push_back({3, Effectiveness::ramp(0.1), 0.0});
  for (double t = 0.0; t < 30.0; t += 0.7) {
    const double d = fault_matrix(ramp, 8, nullptr, t).diagonal()(2);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
  FaultProfile bad;
  bad.entries.push_back({9, Effectiveness::constant(0.0), 0.0});
  try {
    fault_matrix(bad, 8, nullptr, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IndexOutOfRange);
  }
  const ClusterSpec clusters = vessel_thruster_clusters();
  bad.mode = FaultProfile::Mode::PerCluster;
  bad.entries[0].target = 6;
  EXPECT_THROW(fault_matrix(bad, 8, &clusters, 1.0), Error);
}

TEST(PlantDerivative, Examples) {
  const LtiPlant plant = build_vessel_plant(VesselParams::reference());
  const auto identity = fault_matrix(FaultProfile{}, 8, nullptr, 0.0);
  EXPECT_EQ(plant_derivative(plant, Vector::Zero(6), Vector::Zero(8), identity, Vector::Zero(6)).norm(), 0.0);

  Vector x(6);
  x << 1, 1, 0, 2.2, 1.9, 0;
  Vector tau(3);
  tau << 1e5, 2e5, -3e4;
  const Vector u = allocate_nominal(plant.G, tau).u;
  const Vector got = plant_derivative(plant, x, u, identity, Vector::Zero(6));
  // Independent dense evaluation with explicit loops.
  Vector oracle = Vector::Zero(6);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) oracle(i) += plant.A(i, j) * x(j);
    for (int j = 0; j < 3; ++j) oracle(i) += plant.B(i, j) * tau(j);
  }
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(got(i), oracle(i), 1e-12 * (1.0 + std::abs(oracle(i))));

  EXPECT_THROW(plant_derivative(plant, x, Vector::Zero(7), identity, Vector::Zero(6)), Error);
}

TEST(Disturbance, InputMap) {
  const VesselParams params = VesselParams::reference();
  const Matrix e = vessel_disturbance_input(params);
  EXPECT_EQ(max_abs(e.topRows(3)), 0.0);
  EXPECT_LT(max_abs(e.bottomRows(3) - Matrix(params.inertia.inverse())), 1e-15);
}

}  // namespace
