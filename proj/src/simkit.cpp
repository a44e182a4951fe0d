#include "cofd/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace cofd {

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(Errc::ConfigError, message);
}

std::vector<MultiIndex> to_indices(const std::vector<std::vector<int>>& lists, int domain) {
  std::vector<MultiIndex> out;
  for (const auto& list : lists) out.push_back(MultiIndex::ordered(list, domain));
  return out;
}

std::vector<std::pair<int, int>> resolve_pairs(const ClusterSpec& units,
                                               const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [a, b] : pairs) {
    const int ia = units.find(a);
    const int ib = units.find(b);
    if (ia == 0 || ib == 0) throw Error(Errc::UnknownHypothesis, "unknown unit in pair " + a + "+" + b);
    out.emplace_back(ia, ib);
  }
  return out;
}

ObserverDesign design_for(const BankSpec& spec, int k0, int n) {
  ObserverDesign design = default_design(k0, n);
  if (static_cast<int>(spec.target_eigenvalues.size()) == k0) {
    design.target_eigenvalues = Eigen::Map<const Vector>(spec.target_eigenvalues.data(), k0);
  }
  if (static_cast<int>(spec.complement_eigenvalues.size()) == n - k0) {
    design.complement_eigenvalues = Eigen::Map<const Vector>(spec.complement_eigenvalues.data(), n - k0);
  }
  return design;
}

LVector widen(const Vector& v) { return v.cast<long double>(); }

Vector narrow(const LVector& v) { return v.cast<double>(); }

}  // namespace

void DisturbanceModel::validate() const {
  require(bound > 0.0, "disturbance bound must be positive");
  require(constant_fraction >= 0.0 && oscillating_fraction >= 0.0 && constant_fraction + oscillating_fraction <= 1.0,
          "disturbance fractions must be non-negative and sum to at most 1");
}

Disturbance::Disturbance(const DisturbanceModel& model, std::uint64_t seed) : model_(model) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  do {
    direction_ = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (direction_.norm() < 1e-3);
  direction_.normalize();
  phase_ = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
}

Eigen::Vector3d Disturbance::load(double t) const {
  if (!model_.enabled) return Eigen::Vector3d::Zero();
  const double angle = model_.rotation_rate * t + phase_;
  const Eigen::Vector3d rotating(std::cos(angle), std::sin(angle), 0.0);
  return model_.constant_fraction * model_.bound * direction_ +
         model_.oscillating_fraction * model_.bound * std::sin(model_.frequency * t) * rotating;
}

void ScenarioConfig::validate() const {
  require(sim.dt > 0.0 && std::isfinite(sim.dt), "sim.dt must be positive");
  require(sim.duration > 0.0 && std::isfinite(sim.duration), "sim.duration must be positive");
  require(sim.duration >= sim.dt, "sim.duration must cover at least one step");
  require(fdi.start_phase >= 0, "fdi.start_phase must be non-negative");
  require(fdi.start_phase == 0 || !bank.common_modes.empty(), "fdi.start_phase needs a common mode");
  require(fdi.escalation.dwell >= 0.0, "fdi.dwell must be non-negative");
  if (sim.disturbance.enabled) {
    require(plant.kind == PlantSpec::Kind::Vessel, "disturbances are only modelled for the vessel");
  }
  sim.disturbance.validate();
  try {
    fdi.policy.validate();
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.detail());
  }
  require(sim.control.integral_limit >= 0.0, "control.integral_limit must be non-negative");
  for (const auto& mode : bank.common_modes) {
    require(!mode.clusters.empty(), "common mode needs clusters");
    require(mode.zeta.kind == ZetaPolicy::Kind::Fixed || mode.indices.has_value(),
            "common modes with snapshot coefficients need explicit indices");
  }
}

double default_warmup(const ObserverDesign& design, bool square_output) {
  double slowest = -std::numeric_limits<double>::infinity();
  if (design.target_eigenvalues.size() > 0) slowest = design.target_eigenvalues.maxCoeff();
  if (square_output && design.complement_eigenvalues.size() > 0) {
    slowest = std::max(slowest, design.complement_eigenvalues.maxCoeff());
  }
  if (!std::isfinite(slowest) || slowest >= 0.0) return 5.0;
  return 5.0 / std::abs(slowest);
}

ScenarioModel build_model(const ScenarioConfig& config) {
  config.validate();
  ScenarioModel model;
  const auto& ps = config.plant;
  if (ps.kind == PlantSpec::Kind::Vessel) {
    model.plant = build_vessel_plant(ps.vessel);
    model.units = ps.units.empty() ? vessel_thruster_clusters() : ClusterSpec::from_groups(ps.units, ps.unit_names);
    model.disturbance_input = vessel_disturbance_input(ps.vessel);
  } else {
    model.plant = LtiPlant::make(ps.A, ps.B, ps.C, ps.G);
    model.units = ps.units.empty() ? ClusterSpec::singletons(model.plant.m())
                                   : ClusterSpec::from_groups(ps.units, ps.unit_names);
  }
  const auto& plant = model.plant;
  require(model.units.m() == plant.m(), "plant.units must cover every actuator");
  if (ps.x0.size() != 0) require(ps.x0.size() == plant.n(), "plant.x0 must have n entries");
  if (ps.feedback.size() != 0) {
    require(ps.feedback.rows() == plant.k() && ps.feedback.cols() == plant.p(), "plant.feedback must be k x p");
  }
  model.section = build_output_section(plant.C);
  const bool square = plant.C.rows() == plant.C.cols();

  BankRequest request;
  request.mode = BankMode::Actuator;
  int k0 = 0;
  if (config.bank.indices) {
    request.explicit_indices = to_indices(*config.bank.indices, plant.m());
    require(!request.explicit_indices->empty(), "bank.indices is empty");
    k0 = request.explicit_indices->front().length();
  } else {
    k0 = std::min(matrixlab::uniform_sub_rank(plant.W), plant.p());
  }
  require(k0 >= 1, "input matrix admits no observer");
  model.design = design_for(config.bank, k0, plant.n());
  request.design = model.design;
  model.bank = build_bank(plant, plant.W, request, model.section);
  if (config.bank.indices && !model.bank.failures.empty()) {
    const auto& f = model.bank.failures.front();
    throw Error(f.code, "observer " + f.J.to_string() + ": " + f.message);
  }

  PhaseSetup base;
  base.table = build_signature_table(model.bank,
                                     unit_hypotheses(model.units, BankMode::Actuator,
                                                     resolve_pairs(model.units, config.bank.pairs)));
  base.warmup = default_warmup(model.design, square);
  model.phases.push_back(std::move(base));

  for (const auto& mode : config.bank.common_modes) {
    ClusterSpec clusters = ClusterSpec::from_groups(mode.clusters, mode.names);
    require(clusters.m() == plant.m(), "common-mode clusters must cover every actuator");
    std::vector<MultiIndex> indices;
    if (mode.indices) {
      indices = to_indices(*mode.indices, clusters.q());
    } else {
      const auto ratios = RatioConstraintSet::from_coefficients(clusters, mode.zeta.fixed, mode.zeta.reference);
      const Matrix w_star = cluster_overall_columns(plant.W, clusters, ratios);
      const int k0c = std::min(matrixlab::uniform_sub_rank(w_star), plant.p());
      require(k0c >= 1, "common mode admits no observer");
      indices = matrixlab::enumerate_multi_indices(k0c, clusters.q());
    }
    require(!indices.empty(), "common mode has no observers");
    PhaseSetup setup;
    const auto design = design_for(config.bank, indices.front().length(), plant.n());
    setup.table = build_signature_table(indices, clusters.q(),
                                        unit_hypotheses(clusters, BankMode::Cluster, resolve_pairs(clusters, mode.pairs)));
    setup.warmup = default_warmup(design, square);
    model.phases.push_back(std::move(setup));
    model.mode_clusters.push_back(std::move(clusters));
    model.mode_indices.push_back(std::move(indices));
    model.mode_designs.push_back(design);
  }
  return model;
}

int mode_of_phase(const ScenarioModel& model, int phase) {
  const int modes = static_cast<int>(model.mode_clusters.size());
  if (phase < 1 || modes == 0) throw Error(Errc::InvalidArgument, "phase " + std::to_string(phase) + " has no common mode");
  return (phase - 1) % modes;
}

ObserverBank build_mode_bank(const ScenarioModel& model, int mode, const Matrix& w_star) {
  BankRequest request;
  request.mode = BankMode::Cluster;
  request.explicit_indices = model.mode_indices.at(static_cast<std::size_t>(mode));
  request.design = model.mode_designs.at(static_cast<std::size_t>(mode));
  ObserverBank bank = build_bank(model.plant, w_star, request, model.section);
  if (!bank.failures.empty()) {
    const auto& f = bank.failures.front();
    throw Error(f.code, "cluster observer " + f.J.to_string() + ": " + f.message);
  }
  return bank;
}

Eigen::Vector3d commanded_effect(const Vector& y, ControllerState& state, const ControlSpec& spec,
                                 const Eigen::Matrix3d& damping, double heading_reference, double dt) {
  if (y.size() < 6) throw Error(Errc::DimensionMismatch, "commanded effect needs heading and velocities");
  const Eigen::Vector3d nu = y.segment<3>(3);
  const double error = y(2) - heading_reference;
  const double a_psi = -spec.kp * error - spec.ki * state.integral - spec.kd * nu(2);
  Eigen::Vector3d tau = damping * nu;
  tau(2) += a_psi;
  if (state.tracking) {
    tau(0) += spec.tracking_gains[0] * (state.velocity_reference(0) - nu(0));
    tau(1) += spec.tracking_gains[1] * (state.velocity_reference(1) - nu(1));
  }
  state.integral += dt * error;
  if (spec.ki > 0.0) {
    const double cap = spec.integral_limit / spec.ki;
    state.integral = std::clamp(state.integral, -cap, cap);
  }
  return tau;
}

ScenarioConfig fault_free_variant(const ScenarioConfig& config) {
  ScenarioConfig out = config;
  out.faults.entries.clear();
  out.fdi.escalation.enabled = false;
  out.fdi.start_phase = 0;
  out.sim.reconfiguration.targets.clear();
  if (out.sim.reconfiguration.mode == ReconfigurationSpec::Mode::Auto) {
    out.sim.reconfiguration.mode = ReconfigurationSpec::Mode::Off;
  }
  return out;
}

namespace {

// Runtime state of the active observer bank.
struct ActiveBank {
  ObserverBank bank;
  std::vector<ObserverKernel<long double>> kernels;
  std::vector<LVector> x_hat;

  void load(ObserverBank next, const LtiPlant& plant, const Matrix& section, const LVector& y) {
    bank = std::move(next);
    kernels.clear();
    x_hat.clear();
    const LMatrix s = section.cast<long double>();
    for (const auto& obs : bank.observers) {
      kernels.emplace_back(obs, plant);
      x_hat.push_back(kernels.back().initial_estimate(s, y));
    }
  }
};

std::vector<std::string> unit_names(const ClusterSpec& spec, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(spec.name(id));
  return out;
}

}  // namespace

SimulationResult run_scenario(const ScenarioConfig& config) {
  const ScenarioModel model = build_model(config);
  const auto& plant = model.plant;
  const int n = plant.n();
  const int m = plant.m();
  const bool vessel = config.plant.kind == PlantSpec::Kind::Vessel;
  const double dt = config.sim.dt;
  const auto last_step = static_cast<std::size_t>(std::llround(config.sim.duration / dt));
  const auto& reconf = config.sim.reconfiguration;

  const LMatrix a = plant.A.cast<long double>();
  const LMatrix b = plant.B.cast<long double>();
  const LMatrix g = plant.G.cast<long double>();
  const LMatrix c = plant.C.cast<long double>();
  const LMatrix e = model.disturbance_input.size() ? model.disturbance_input.cast<long double>() : LMatrix();
  const Disturbance disturbance(config.sim.disturbance, config.sim.seed);
  const ClusterSpec* fault_clusters = config.faults.mode == FaultProfile::Mode::PerCluster ? &model.units : nullptr;

  Vector x0 = config.plant.x0.size() ? config.plant.x0 : Vector::Zero(n);
  if (vessel && config.plant.x0.size() == 0) {
    x0 = Vector(6);
    x0 << 1.0, 1.0, 0.0, 2.2, 1.9, 0.0;
  }
  LVector x = widen(x0);

  FdiEngine engine(model.phases, config.fdi.policy, config.fdi.escalation);
  ControllerState controller;
  if (vessel) controller.velocity_reference = x0.segment<3>(3);

  int phase = config.fdi.start_phase;
  ActiveBank active;
  AllocationLaw law = AllocationLaw::nominal(plant.G);
  std::vector<int> zeroed;
  bool fixed_done = false;
  Vector last_u = Vector::Zero(m);

  SimulationResult result;
  auto& log = result.log;
  auto& summary = result.summary;

  auto enter_common_mode = [&](int next_phase, const LVector& y, double t) {
    const int mode = mode_of_phase(model, next_phase);
    const auto& spec = config.bank.common_modes[static_cast<std::size_t>(mode)];
    const auto& clusters = model.mode_clusters[static_cast<std::size_t>(mode)];
    const EscalationPlan plan =
        escalate_to_cluster_mode(plant, last_u, clusters, spec.zeta, model.mode_indices[static_cast<std::size_t>(mode)]);
    if (plan.no_op) {
      active.load(model.bank, plant, model.section.S, y);
    } else {
      active.load(build_mode_bank(model, mode, plan.input_matrix), plant, model.section.S, y);
      if (zeroed.empty()) law = AllocationLaw::with_ratios(plant.G, clusters, plan.ratios);
    }
    phase = next_phase;
    SimEvent event{SimEvent::Kind::Escalation, t, phase, {}, "common mode " + std::to_string(mode + 1)};
    for (const auto& coeffs : plan.ratios.coefficients()) {
      for (double zeta : coeffs) event.detail += " " + std::to_string(zeta);
    }
    log.events.push_back(std::move(event));
    if (!summary.escalation_time) summary.escalation_time = t;
  };

  auto apply_zeroing = [&](std::vector<int> units, const ClusterSpec& spec, double t) {
    std::vector<int> actuators = zeroed;
    for (int unit : units) {
      const auto& group = spec.group(unit);
      actuators.insert(actuators.end(), group.begin(), group.end());
    }
    std::sort(actuators.begin(), actuators.end());
    actuators.erase(std::unique(actuators.begin(), actuators.end()), actuators.end());
    controller.tracking = vessel && config.sim.control.tracking;
    if (!summary.reconfiguration_time) summary.reconfiguration_time = t;
    if (actuators == zeroed) return;
    law = AllocationLaw::reduced(plant.G, actuators);
    zeroed = actuators;
    const auto names = unit_names(spec, units);
    for (const auto& name : names) {
      if (std::find(summary.reconfigured.begin(), summary.reconfigured.end(), name) == summary.reconfigured.end()) {
        summary.reconfigured.push_back(name);
      }
    }
    log.events.push_back({SimEvent::Kind::Reconfiguration, t, phase, units, "zeroed actuators " + std::to_string(zeroed.size())});
  };

  auto current_units = [&]() -> const ClusterSpec& {
    return phase == 0 ? model.units : model.mode_clusters[static_cast<std::size_t>(mode_of_phase(model, phase))];
  };

  std::size_t step = 0;
  try {
    {
      const LVector y0 = c * x;
      if (phase == 0) {
        active.load(model.bank, plant, model.section.S, y0);
      } else {
        if (vessel) {
          ControllerState probe = controller;
          last_u = AllocationLaw::nominal(plant.G)
                       .apply(commanded_effect(narrow(y0), probe, config.sim.control, config.plant.vessel.damping,
                                               config.plant.vessel.reference_heading, dt))
                       .u;
        }
        enter_common_mode(phase, y0, 0.0);
      }
    }

    for (step = 0; step <= last_step; ++step) {
      const double t = static_cast<double>(step) * dt;
      const LVector y = c * x;
      const Vector y_d = narrow(y);

      std::vector<Vector> residuals;
      residuals.reserve(active.kernels.size());
      for (std::size_t h = 0; h < active.kernels.size(); ++h) {
        residuals.push_back(narrow(active.kernels[h].residual(active.x_hat[h], y)));
      }
      const int fed_phase = phase;
      const auto decision = engine.feed(t, phase, residuals);
      log.residuals.push_back(residuals);
      log.phase.push_back(fed_phase);

      if (decision) {
        if (!summary.detection_time && decision->status != Status::Nominal) summary.detection_time = t;
        if (!summary.isolation_time && decision->status == Status::Isolated) {
          summary.isolation_time = t;
          summary.isolated = decision->hypotheses;
        }
        if (decision->escalate) {
          enter_common_mode(phase + 1, y, t);
        } else if (reconf.mode == ReconfigurationSpec::Mode::Auto && decision->status == Status::Isolated) {
          const auto& table = engine.setup_for(fed_phase).table;
          const auto directive =
              trigger_reconfiguration(*decision, table, current_units(), plant.G, reconf.scope, reconf.groups);
          apply_zeroing(directive.units, current_units(), t);
        }
      }
      if (reconf.mode == ReconfigurationSpec::Mode::Fixed && !fixed_done && t >= reconf.time - 0.5 * dt) {
        fixed_done = true;
        if (!reconf.targets.empty()) {
          std::vector<int> units;
          for (const auto& name : reconf.targets) {
            const int id = model.units.find(name);
            if (id == 0) throw Error(Errc::ConfigError, "unknown reconfiguration target " + name);
            units.push_back(id);
          }
          apply_zeroing(units, model.units, t);
        } else if (engine.current().status == Status::Isolated) {
          const auto& table = engine.setup_for(phase).table;
          const auto directive =
              trigger_reconfiguration(engine.current(), table, current_units(), plant.G, reconf.scope, reconf.groups);
          apply_zeroing(directive.units, current_units(), t);
        } else {
          apply_zeroing({}, model.units, t);
        }
      }

      Vector tau_c;
      if (vessel) {
        tau_c = commanded_effect(y_d, controller, config.sim.control, config.plant.vessel.damping,
                                 config.plant.vessel.reference_heading, dt);
      } else {
        tau_c = config.plant.feedback.size() ? Vector(-config.plant.feedback * y_d) : Vector::Zero(plant.k());
      }
      const AllocationResult alloc = law.apply(tau_c);
      last_u = alloc.u;
      const auto delta_now = fault_matrix(config.faults, m, fault_clusters, t);

      log.time.push_back(t);
      log.x.push_back(narrow(x));
      log.u.push_back(alloc.u);
      log.tau_c.push_back(tau_c);
      log.tau.push_back(plant.G * (delta_now * alloc.u));
      log.allocation.push_back(law.kind());
      if (alloc.exact) {
        const double err = (alloc.effect - tau_c).norm() / (1.0 + tau_c.norm());
        summary.max_allocation_error = std::max(summary.max_allocation_error, err);
      }
      if (step == last_step) break;

      // Plant and observers advance together so that every observer sees the
      // plant output at the same stage points. u and v are held over the step.
      const LVector u_l = widen(alloc.u);
      // Plant and observers form G u in the same precision so that a
      // fault-free plant input equals B v exactly.
      const LVector v_l = g * u_l;
      const int banks = static_cast<int>(active.kernels.size());
      const int seg = n + plant.p();
      LVector joint(n + seg * banks);
      joint.head(n) = x;
      // Observer segments carry the increment of their internal state over
      // this step, starting from zero.
      joint.tail(seg * banks).setZero();
      const LVector y_start = c * x;
      auto derivative = [&](double ts, const LVector& s) {
        LVector ds(s.size());
        const LVector xs = s.head(n);
        const auto delta = fault_matrix(config.faults, m, fault_clusters, ts);
        LVector applied = u_l;
        for (int i = 0; i < m; ++i) applied(i) *= static_cast<long double>(delta.diagonal()(i));
        ds.head(n) = a * xs + b * (g * applied);
        if (config.sim.disturbance.enabled) ds.head(n) += e * disturbance.load(ts).cast<long double>();
        const LVector ys = c * xs;
        for (int h = 0; h < banks; ++h) {
          ds.segment(n + seg * h, seg) =
              active.kernels[static_cast<std::size_t>(h)].increment_derivative(
                  s.segment(n + seg * h, seg), active.x_hat[static_cast<std::size_t>(h)], ys, y_start, v_l);
        }
        return ds;
      };
      joint = rk4_step(derivative, joint, t, dt);
      x = joint.head(n);
      const LVector y_end = c * x;
      for (int h = 0; h < banks; ++h) {
        auto& estimate = active.x_hat[static_cast<std::size_t>(h)];
        estimate = active.kernels[static_cast<std::size_t>(h)].finish_step(estimate, joint.segment(n + seg * h, seg),
                                                                           y_start, y_end);
      }
    }
  } catch (const Error& err) {
    throw Error(err.code(), "step " + std::to_string(step) + ": " + err.detail());
  }

  log.decisions = engine.log();
  if (vessel && summary.reconfiguration_time) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < log.steps(); ++k) {
      if (log.time[k] < *summary.reconfiguration_time) continue;
      sum += (log.x[k].segment<2>(3) - controller.velocity_reference.head<2>()).squaredNorm();
      ++count;
    }
    if (count > 0) summary.tracking_rms = std::sqrt(sum / static_cast<double>(count));
  }
  return result;
}

Vector windowed_rms_envelope(const TraceLog& log, const ScenarioModel& model, const ThresholdPolicy& policy) {
  const int p = model.plant.p();
  Vector envelope = Vector::Zero(p);
  int phase = -1;
  double warmup_end = 0.0;
  std::vector<Vector> sums;
  int count = 0;
  for (std::size_t k = 0; k < log.steps(); ++k) {
    const double t = log.time[k];
    if (log.phase[k] != phase) {
      phase = log.phase[k];
      const auto& setup = phase == 0 ? model.phases.front()
                                     : model.phases[1 + static_cast<std::size_t>(mode_of_phase(model, phase))];
      warmup_end = t + (policy.warmup ? *policy.warmup : setup.warmup);
      sums.assign(log.residuals[k].size(), Vector::Zero(p));
      count = 0;
    }
    if (t < warmup_end) continue;
    for (std::size_t h = 0; h < sums.size(); ++h) sums[h] += log.residuals[k][h].cwiseAbs2();
    if (++count < policy.window) continue;
    for (auto& s : sums) {
      envelope = envelope.cwiseMax((s / static_cast<double>(count)).cwiseSqrt());
      s.setZero();
    }
    count = 0;
  }
  return envelope;
}

Vector calibrate_thresholds(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds, double factor,
                            double floor) {
  if (seeds.empty()) throw Error(Errc::InvalidArgument, "calibration needs at least one seed");
  if (!(factor > 0.0) || !(floor > 0.0)) throw Error(Errc::InvalidArgument, "factor and floor must be positive");
  ScenarioConfig base = fault_free_variant(config);
  const ScenarioModel model = build_model(base);
  Vector envelope = Vector::Zero(model.plant.p());
  for (auto seed : seeds) {
    base.sim.seed = seed;
    const auto run = run_scenario(base);
    envelope = envelope.cwiseMax(windowed_rms_envelope(run.log, model, base.fdi.policy));
  }
  return (factor * envelope).cwiseMax(floor);
}

}  // namespace cofd
