#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cofd/allocation.hpp"
#include "cofd/fdi.hpp"
#include "cofd/observers.hpp"
#include "cofd/plant.hpp"

namespace cofd {

// Slowly varying environmental load b(t) = constant part on a seeded fixed
// direction plus a sinusoid whose horizontal direction rotates.
struct DisturbanceModel {
  bool enabled = false;
  double bound = 5e6;
  double constant_fraction = 0.6;
  double oscillating_fraction = 0.4;
  double frequency = 0.1;       // rad/s
  double rotation_rate = 0.05;  // rad/s

  void validate() const;
};

class Disturbance {
 public:
  Disturbance() = default;
  Disturbance(const DisturbanceModel& model, std::uint64_t seed);

  Eigen::Vector3d load(double t) const;
  const Eigen::Vector3d& direction() const noexcept { return direction_; }

 private:
  DisturbanceModel model_;
  Eigen::Vector3d direction_ = Eigen::Vector3d::Zero();
  double phase_ = 0.0;
};

struct PlantSpec {
  enum class Kind { Vessel, Custom };

  Kind kind = Kind::Vessel;
  VesselParams vessel = VesselParams::reference();
  // Custom plants only.
  Matrix A, B, C, G;
  Matrix feedback;  // tau_c = -feedback * y; empty means zero
  // Effector grouping; empty means the vessel thrusters or singletons.
  std::vector<std::vector<int>> units;
  std::vector<std::string> unit_names;
  Vector x0;
};

struct CommonModeSpec {
  std::vector<std::vector<int>> clusters;
  std::vector<std::string> names;
  ZetaPolicy zeta;
  std::optional<std::vector<std::vector<int>>> indices;
  std::vector<std::pair<std::string, std::string>> pairs;
};

struct BankSpec {
  std::optional<std::vector<std::vector<int>>> indices;  // nullopt: every subset of length k0
  std::vector<double> target_eigenvalues;                 // empty: defaults
  std::vector<double> complement_eigenvalues;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<CommonModeSpec> common_modes;
};

struct FdiSpec {
  ThresholdPolicy policy;
  EscalationPolicy escalation;
  int start_phase = 0;
};

struct ControlSpec {
  double kp = 1e8;
  double ki = 1e6;
  double kd = 1e8;
  double integral_limit = 1e8;  // bound on |ki * integral|, N m
  bool tracking = true;         // velocity tracking once reconfigured
  std::array<double, 2> tracking_gains{2e6, 3e6};
};

struct ReconfigurationSpec {
  enum class Mode { Off, Auto, Fixed };

  Mode mode = Mode::Off;
  double time = 180.0;
  ReconfigurationScope scope = ReconfigurationScope::IsolatedOnly;
  std::vector<std::vector<int>> groups;
  // Fixed mode: units to switch off; empty means the isolated ones.
  std::vector<std::string> targets;
};

struct SimSpec {
  double dt = 0.01;
  double duration = 200.0;
  std::uint64_t seed = 1;
  ControlSpec control;
  DisturbanceModel disturbance;
  ReconfigurationSpec reconfiguration;
};

struct OutputSpec {
  std::string directory = "out";
};

struct ScenarioConfig {
  PlantSpec plant;
  BankSpec bank;
  FaultProfile faults;
  FdiSpec fdi;
  SimSpec sim;
  OutputSpec outputs;

  void validate() const;
};

// Everything derived from a config that both the simulator and the offline
// analyzer need.
struct ScenarioModel {
  LtiPlant plant;
  ClusterSpec units;
  OutputSection section;
  ObserverDesign design;
  ObserverBank bank;                       // phase 0
  std::vector<ClusterSpec> mode_clusters;  // per common mode
  std::vector<std::vector<MultiIndex>> mode_indices;
  std::vector<ObserverDesign> mode_designs;
  std::vector<PhaseSetup> phases;
  Matrix disturbance_input;  // n x 3, empty for custom plants
};

ScenarioModel build_model(const ScenarioConfig& config);

// Phase j >= 1 runs common mode (j - 1) mod modes.
int mode_of_phase(const ScenarioModel& model, int phase);

// Cluster observer bank of one common mode for the given W*.
ObserverBank build_mode_bank(const ScenarioModel& model, int mode, const Matrix& w_star);

// 5 / |slowest design eigenvalue|.
double default_warmup(const ObserverDesign& design, bool square_output);

struct ControllerState {
  double integral = 0.0;
  bool tracking = false;
  Eigen::Vector3d velocity_reference = Eigen::Vector3d::Zero();
};

// tau_c = D nu + (0, 0, a_psi) plus surge/sway tracking when enabled. a_psi is
// a PID on the heading error with the derivative taken on the measured yaw
// rate and a clamped integrator.
Eigen::Vector3d commanded_effect(const Vector& y, ControllerState& state, const ControlSpec& spec,
                                 const Eigen::Matrix3d& damping, double heading_reference, double dt);

struct SimEvent {
  enum class Kind { Escalation, Reconfiguration };

  Kind kind = Kind::Escalation;
  double time = 0.0;
  int phase = 0;
  std::vector<int> units;
  std::string detail;
};

struct TraceLog {
  std::vector<double> time;
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::vector<Vector> tau_c;
  std::vector<Vector> tau;
  std::vector<int> phase;
  std::vector<AllocationLaw::Kind> allocation;
  std::vector<std::vector<Vector>> residuals;  // per step, per active observer
  std::vector<Decision> decisions;
  std::vector<SimEvent> events;

  std::size_t steps() const noexcept { return time.size(); }
};

struct RunSummary {
  std::optional<double> detection_time;
  std::optional<double> isolation_time;
  std::vector<std::string> isolated;
  std::optional<double> escalation_time;
  std::optional<double> reconfiguration_time;
  std::vector<std::string> reconfigured;
  std::optional<double> tracking_rms;  // surge/sway error after reconfiguration
  double max_allocation_error = 0.0;   // max |G u - tau_c| / (1 + |tau_c|) on exact steps
};

struct SimulationResult {
  TraceLog log;
  RunSummary summary;
};

SimulationResult run_scenario(const ScenarioConfig& config);

// The config turned into a fault-free, non-reconfiguring run.
ScenarioConfig fault_free_variant(const ScenarioConfig& config);

// Per-channel absolute thresholds: factor x the largest windowed residual RMS
// seen in fault-free runs of the config over the given seeds, floored.
Vector calibrate_thresholds(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                            double factor = 3.0, double floor = 1e-6);

// Largest windowed RMS per output channel over all observers and all
// post-warm-up windows of a trace.
Vector windowed_rms_envelope(const TraceLog& log, const ScenarioModel& model, const ThresholdPolicy& policy);

}  // namespace cofd
