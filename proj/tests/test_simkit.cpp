#include <cmath>

#include <gtest/gtest.h>

#include "cofd/csv.hpp"
#include "cofd/errors.hpp"
#include "cofd/simkit.hpp"
#include "support.hpp"

namespace {

using namespace cofd;

Vector output(double psi, const Eigen::Vector3d& nu) {
  Vector y = Vector::Zero(6);
  y(2) = psi;
  y.segment<3>(3) = nu;
  return y;
}

TEST(CommandedEffect, Examples) {
  const ControlSpec spec;
  const Eigen::Matrix3d d = VesselParams::reference().damping;
  ControllerState state;
  EXPECT_EQ(commanded_effect(output(0.0, Eigen::Vector3d::Zero()), state, spec, d, 0.0, 0.01).norm(), 0.0);

  const Eigen::Vector3d nu0(2.2, 1.9, 0.0);
  state = {};
  const Eigen::Vector3d tau = commanded_effect(output(0.0, nu0), state, spec, d, 0.0, 0.01);
  Eigen::Vector3d oracle;
  for (int i = 0; i < 3; ++i) oracle(i) = d(i, 0) * 2.2 + d(i, 1) * 1.9;
  EXPECT_LT((tau - oracle).norm(), 1e-9 * oracle.norm());
}

TEST(CommandedEffect, HeadingPidAndClamp) {
  ControlSpec spec;
  const Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  ControllerState state;
  const Eigen::Vector3d first = commanded_effect(output(0.1, Eigen::Vector3d(0, 0, 0.02)), state, spec, d, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(first(2), -spec.kp * 0.1 - spec.kd * 0.02);
  EXPECT_DOUBLE_EQ(state.integral, 0.05);
  for (int i = 0; i < 100000; ++i) commanded_effect(output(1.0, Eigen::Vector3d::Zero()), state, spec, d, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(state.integral * spec.ki, spec.integral_limit);
}

TEST(CommandedEffect, VelocityTracking) {
  ControlSpec spec;
  const Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  ControllerState state;
  state.tracking = true;
  state.velocity_reference = Eigen::Vector3d(2.2, 1.9, 0.0);
  const Eigen::Vector3d tau = commanded_effect(output(0.0, Eigen::Vector3d(2.0, 2.0, 0.0)), state, spec, d, 0.0, 0.01);
  EXPECT_NEAR(tau(0), spec.tracking_gains[0] * 0.2, 1e-6);
  EXPECT_NEAR(tau(1), spec.tracking_gains[1] * -0.1, 1e-6);
  EXPECT_THROW(commanded_effect(Vector::Zero(3), state, spec, d, 0.0, 0.01), Error);
}

TEST(DisturbanceLoad, BoundedAndSeeded) {
  DisturbanceModel model;
  model.enabled = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Disturbance b(model, seed);
    EXPECT_NEAR(b.direction().norm(), 1.0, 1e-12);
    for (double t = 0.0; t <= 300.0; t += 0.37) ASSERT_LE(b.load(t).norm(), model.bound * (1.0 + 1e-12));
  }
  const Disturbance a(model, 7);
  const Disturbance again(model, 7);
  const Disturbance other(model, 8);
  EXPECT_EQ((a.load(12.3) - again.load(12.3)).norm(), 0.0);
  EXPECT_GT((a.load(12.3) - other.load(12.3)).norm(), 0.0);
  model.enabled = false;
  EXPECT_EQ(Disturbance(model, 1).load(3.0).norm(), 0.0);
  model.constant_fraction = 0.7;
  EXPECT_THROW(model.validate(), Error);
}

TEST(Scenario, FaultFreeResidualsVanish) {
  ScenarioConfig config = fault_free_variant(test::load_example("t1_fault"));
  config.sim.duration = 100.0;
  const SimulationResult result = run_scenario(config);
  ASSERT_EQ(result.log.steps(), 10001u);
  for (const auto& step : result.log.residuals) {
    for (const auto& r : step) ASSERT_LT(r.norm(), 1e-9);
  }
  for (const auto& d : result.log.decisions) EXPECT_EQ(d.status, Status::Nominal);
  EXPECT_FALSE(result.summary.detection_time);
  EXPECT_TRUE(result.summary.isolated.empty());
}

TEST(Scenario, DeterministicTrace) {
  ScenarioConfig config = test::load_example("fault_free_disturbed");
  config.sim.duration = 60.0;
  const auto a = run_scenario(config);
  const auto b = run_scenario(config);
  EXPECT_EQ(csv::trace_csv(a.log), csv::trace_csv(b.log));
  EXPECT_EQ(csv::residual_csvs(a.log), csv::residual_csvs(b.log));
  EXPECT_EQ(csv::decisions_csv(a.log.decisions), csv::decisions_csv(b.log.decisions));
  config.sim.seed = 99;
  EXPECT_NE(csv::trace_csv(run_scenario(config).log), csv::trace_csv(a.log));
}

TEST(Scenario, ClosedLoopAllocationIsExact) {
  const ScenarioConfig config = test::load_example("t1_fault");
  const ScenarioModel model = build_model(config);
  const SimulationResult result = run_scenario(config);
  const Matrix& g = model.plant.G;
  for (std::size_t k = 0; k < result.log.steps(); ++k) {
    const Vector& tau_c = result.log.tau_c[k];
    ASSERT_LE((g * result.log.u[k] - tau_c).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + tau_c.norm())) << "step " << k;
  }
  EXPECT_LT(result.summary.max_allocation_error, 1e-9);
  EXPECT_EQ(result.summary.isolated, (std::vector<std::string>{"T1"}));
}

TEST(Scenario, StepHalvingConverges) {
  const ScenarioConfig config = test::load_example("t1_fault");
  ScenarioConfig fine = config;
  fine.sim.dt = config.sim.dt / 2.0;
  fine.fdi.policy.window = 2 * config.fdi.policy.window;
  const Vector coarse_end = run_scenario(config).log.x.back();
  const Vector fine_end = run_scenario(fine).log.x.back();
  EXPECT_LT((coarse_end - fine_end).norm(), 1e-6 * coarse_end.norm());
}

TEST(Scenario, ReconfigurationZeroesThruster) {
  const ScenarioConfig config = test::load_example("reconfiguration");
  const SimulationResult result = run_scenario(config);
  ASSERT_TRUE(result.summary.reconfiguration_time);
  EXPECT_NEAR(*result.summary.reconfiguration_time, config.sim.reconfiguration.time, 1e-9);
  EXPECT_EQ(result.summary.reconfigured, (std::vector<std::string>{"T1"}));
  for (std::size_t k = 0; k < result.log.steps(); ++k) {
    if (result.log.time[k] < config.sim.reconfiguration.time + 1e-9) continue;
    EXPECT_EQ(result.log.u[k](0), 0.0);
    EXPECT_EQ(result.log.u[k](1), 0.0);
  }
  ASSERT_TRUE(result.summary.tracking_rms);
}

TEST(Scenario, CustomPlant) {
  const SimulationResult result = run_scenario(test::load_example("trivial"));
  EXPECT_GT(result.log.steps(), 1u);
  for (const auto& step : result.log.residuals) {
    for (const auto& r : step) ASSERT_LT(r.norm(), 1e-9);
  }
}

TEST(Scenario, ValidationErrors) {
  ScenarioConfig config = test::load_example("t1_fault");
  config.sim.dt = 0.0;
  try {
    config.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ConfigError);
  }
  config = test::load_example("trivial");
  config.sim.disturbance.enabled = true;
  EXPECT_THROW(config.validate(), Error);
}

TEST(Calibration, ThresholdsCoverFaultFreeRuns) {
  ScenarioConfig config = test::load_example("fault_free_disturbed");
  config.sim.duration = 60.0;
  const Vector theta = calibrate_thresholds(config, {1, 2});
  ASSERT_EQ(theta.size(), 6);
  EXPECT_TRUE((theta.array() >= 1e-6).all());
  const ScenarioModel model = build_model(config);
  for (std::uint64_t seed : {1, 2}) {
    config.sim.seed = seed;
    const Vector envelope = windowed_rms_envelope(run_scenario(config).log, model, config.fdi.policy);
    EXPECT_TRUE((envelope.array() * 3.0 <= theta.array() + 1e-300).all());
  }
}

}  // namespace
