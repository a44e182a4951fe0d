#include "cofd/cli.hpp"

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cofd/csv.hpp"

namespace cofd::cli {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

bool is_design_error(Errc code) {
  switch (code) {
    case Errc::RankConditionFailed:
    case Errc::NotHurwitz:
    case Errc::EmptyBank:
    case Errc::RankDeficient:
    case Errc::ReducedRankDeficient:
    case Errc::SingularInertia:
      return true;
    default:
      return false;
  }
}

std::string fmt(double value) {
  std::ostringstream os;
  os << std::setprecision(6) << value;
  return os.str();
}

std::string fmt(const std::optional<double>& value) { return value ? fmt(*value) + " s" : "none"; }

std::string join(const std::vector<std::string>& items, const char* separator) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? separator : "") + items[i];
  return out;
}

// Appends one observer's checks to the report; returns whether it passed.
bool report_observer(const LtiPlant& plant, const UioParams& obs, Json& rows, std::ostream& os) {
  const auto check = check_invariants(plant, obs);
  auto eig = matrixlab::eigenvalues(obs.F);
  std::vector<std::complex<double>> spectrum(eig.data(), eig.data() + eig.size());
  std::sort(spectrum.begin(), spectrum.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
  });
  Json values = Json::array();
  std::string text;
  for (const auto& z : spectrum) {
    const double re = std::abs(z.real()) < 1e-12 ? 0.0 : z.real();
    if (std::abs(z.imag()) > 1e-9) {
      values.push_back(Json::array({re, z.imag()}));
      text += " " + fmt(re) + (z.imag() > 0 ? "+" : "-") + fmt(std::abs(z.imag())) + "i";
    } else {
      values.push_back(re);
      text += " " + fmt(re);
    }
  }
  const int rank_w = matrixlab::numerical_rank(matrixlab::normalize_columns(obs.W_J)).rank;
  const int rank_cw = matrixlab::numerical_rank(matrixlab::normalize_columns(plant.C * obs.W_J)).rank;
  const bool ok = check.passes();
  rows.push_back({{"J", obs.J.indices()},
                  {"eigenvalues", values},
                  {"section_error", check.section_error},
                  {"eigen_error", check.eigen_error},
                  {"hurwitz_margin", -check.abscissa},
                  {"rank_W_J", rank_w},
                  {"rank_CW_J", rank_cw},
                  {"pass", ok}});
  os << "  J=" << obs.J.to_string() << "  eig(F) =" << text << "  |R W_J - S|=" << fmt(check.section_error)
     << "  margin=" << fmt(-check.abscissa) << "  rank(W_J)=" << rank_w << " rank(C W_J)=" << rank_cw << "  "
     << (ok ? "pass" : "FAIL") << "\n";
  return ok;
}

bool report_failures(const ObserverBank& bank, Json& rows, std::ostream& os) {
  for (const auto& f : bank.failures) {
    rows.push_back({{"J", f.J.indices()}, {"error", std::string(to_string(f.code))}, {"message", f.message}, {"pass", false}});
    os << "  J=" << f.J.to_string() << "  " << to_string(f.code) << ": " << f.message << "\n";
  }
  return bank.failures.empty();
}

}  // namespace

fs::path output_directory(const CommandSpec& spec, const ScenarioConfig& config) {
  if (spec.out) return *spec.out;
  if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') return fs::path(env);
  return fs::path(config.outputs.directory);
}

int cmd_design(const ScenarioConfig& config, const std::optional<fs::path>& out, std::ostream& os) {
  const ScenarioModel model = build_model(config);
  Json report;
  bool ok = true;
  Json rows = Json::array();
  os << "actuator bank: " << model.bank.size() << " observer(s), k0=" << model.bank.k0 << "\n";
  for (const auto& obs : model.bank.observers) ok = report_observer(model.plant, obs, rows, os) && ok;
  ok = report_failures(model.bank, rows, os) && ok;
  report["actuator_bank"] = rows;

  Json modes = Json::array();
  for (std::size_t i = 0; i < config.bank.common_modes.size(); ++i) {
    const auto& spec = config.bank.common_modes[i];
    Json mode_rows = Json::array();
    if (spec.zeta.kind == ZetaPolicy::Kind::Snapshot) {
      os << "common mode " << i + 1 << ": coefficients taken at escalation, synthesis deferred\n";
      modes.push_back({{"mode", i + 1}, {"deferred", true}});
      continue;
    }
    const auto& clusters = model.mode_clusters[i];
    const auto ratios = RatioConstraintSet::from_coefficients(clusters, spec.zeta.fixed, spec.zeta.reference);
    BankRequest request;
    request.mode = BankMode::Cluster;
    request.explicit_indices = model.mode_indices[i];
    request.design = model.mode_designs[i];
    const ObserverBank bank =
        build_bank(model.plant, cluster_overall_columns(model.plant.W, clusters, ratios), request, model.section);
    os << "common mode " << i + 1 << ": " << bank.size() << " cluster observer(s), k0=" << bank.k0 << "\n";
    for (const auto& obs : bank.observers) ok = report_observer(model.plant, obs, mode_rows, os) && ok;
    ok = report_failures(bank, mode_rows, os) && ok;
    modes.push_back({{"mode", i + 1}, {"observers", mode_rows}});
  }
  report["common_modes"] = modes;
  report["pass"] = ok;
  if (out) {
    fs::create_directories(*out);
    csv::write_file(*out / "design.json", report.dump(2) + "\n");
  }
  os << (ok ? "all observers pass\n" : "synthesis failed\n");
  return ok ? kOk : kDesignFailure;
}

int cmd_simulate(const ScenarioConfig& config, const fs::path& out, std::ostream& os) {
  const SimulationResult result = run_scenario(config);
  fs::create_directories(out);
  csv::write_file(out / "trace.csv", csv::trace_csv(result.log));
  csv::write_file(out / "decisions.csv", csv::decisions_csv(result.log.decisions));
  const auto residuals = csv::residual_csvs(result.log);
  for (std::size_t h = 0; h < residuals.size(); ++h) {
    csv::write_file(out / ("residual_" + std::to_string(h + 1) + ".csv"), residuals[h]);
  }
  csv::write_file(out / "config.json", serialize_config(config));

  const auto& s = result.summary;
  Json summary = {{"detection_time", s.detection_time ? Json(*s.detection_time) : Json(nullptr)},
                  {"isolation_time", s.isolation_time ? Json(*s.isolation_time) : Json(nullptr)},
                  {"isolated", s.isolated},
                  {"escalation_time", s.escalation_time ? Json(*s.escalation_time) : Json(nullptr)},
                  {"reconfiguration_time", s.reconfiguration_time ? Json(*s.reconfiguration_time) : Json(nullptr)},
                  {"reconfigured", s.reconfigured},
                  {"tracking_rms", s.tracking_rms ? Json(*s.tracking_rms) : Json(nullptr)},
                  {"max_allocation_error", s.max_allocation_error}};
  csv::write_file(out / "summary.json", summary.dump(2) + "\n");

  os << "steps:                " << result.log.steps() << "\n";
  os << "detection time:       " << fmt(s.detection_time) << "\n";
  os << "isolation time:       " << fmt(s.isolation_time) << "\n";
  os << "isolated:             " << (s.isolated.empty() ? "none" : join(s.isolated, ", ")) << "\n";
  if (s.escalation_time) os << "common mode entered:  " << fmt(s.escalation_time) << "\n";
  os << "reconfiguration:      " << fmt(s.reconfiguration_time)
     << (s.reconfigured.empty() ? "" : " (" + join(s.reconfigured, ", ") + " off)") << "\n";
  os << "tracking error RMS:   " << (s.tracking_rms ? fmt(*s.tracking_rms) + " m/s" : "n/a") << "\n";
  os << "max allocation error: " << fmt(s.max_allocation_error) << "\n";
  os << "outputs written to " << out.string() << "\n";
  return kOk;
}

int cmd_analyze(const ScenarioConfig& config, const fs::path& trace, const fs::path& out, std::ostream& os) {
  const ScenarioModel model = build_model(config);
  std::vector<std::string> documents;
  for (int h = 1;; ++h) {
    const fs::path file = trace / ("residual_" + std::to_string(h) + ".csv");
    if (!fs::exists(file)) break;
    documents.push_back(csv::read_file(file));
  }
  const auto bank_size = [&](int phase) {
    if (phase < 0) return 0;
    if (phase == 0) return static_cast<int>(model.phases.front().table.indices.size());
    if (model.mode_clusters.empty()) return 0;
    return static_cast<int>(model.phases[1 + static_cast<std::size_t>(mode_of_phase(model, phase))].table.indices.size());
  };
  const auto stream = csv::parse_residuals(documents, model.plant.p(), bank_size);
  if (fs::exists(trace / "trace.csv")) {
    const auto rows = csv::trace_rows(csv::read_file(trace / "trace.csv"), model.plant.n(), model.plant.m(),
                                      model.plant.k());
    if (rows != stream.time.size()) {
      throw Error(Errc::SchemaMismatch, "trace.csv has " + std::to_string(rows) + " rows, residuals " +
                                            std::to_string(stream.time.size()));
    }
  }
  FdiEngine engine(model.phases, config.fdi.policy, config.fdi.escalation);
  for (std::size_t k = 0; k < stream.time.size(); ++k) engine.feed(stream.time[k], stream.phase[k], stream.residuals[k]);
  const std::string decisions = csv::decisions_csv(engine.log());
  fs::create_directories(out);
  const fs::path target = out / "decisions_analyzed.csv";
  csv::write_file(target, decisions);

  os << "samples analyzed:  " << stream.time.size() << "\n";
  os << "decisions:         " << engine.log().size() << "\n";
  os << "final status:      " << to_string(engine.current().status);
  if (!engine.current().hypotheses.empty()) os << " {" << join(engine.current().hypotheses, ", ") << "}";
  os << "\n";
  if (fs::exists(trace / "decisions.csv")) {
    const bool same = csv::read_file(trace / "decisions.csv") == decisions;
    os << "online decisions:  " << (same ? "identical" : "different") << "\n";
  }
  os << "written to " << target.string() << "\n";
  return kOk;
}

int cmd_sweep(const ScenarioConfig& config, int seeds, const fs::path& out, std::ostream& os) {
  if (seeds < 1) throw Error(Errc::ConfigError, "--seeds must be at least 1");
  std::vector<std::uint64_t> list;
  for (int i = 0; i < seeds; ++i) list.push_back(config.sim.seed + static_cast<std::uint64_t>(i));
  const Vector theta = calibrate_thresholds(config, list);
  ScenarioConfig calibrated = config;
  calibrated.fdi.policy.theta_abs = theta;

  os << "calibrated theta_abs over " << seeds << " fault-free run(s):";
  for (Eigen::Index i = 0; i < theta.size(); ++i) os << " " << fmt(theta(i));
  os << "\n";
  ScenarioConfig check = fault_free_variant(calibrated);
  int alarms = 0;
  for (auto seed : list) {
    check.sim.seed = seed;
    const auto run = run_scenario(check);
    alarms += static_cast<int>(std::count_if(run.log.decisions.begin(), run.log.decisions.end(),
                                             [](const Decision& d) { return d.status != Status::Nominal; }));
  }
  os << "non-nominal decisions with calibrated thresholds: " << alarms << "\n";
  fs::create_directories(out);
  csv::write_file(out / "calibrated.json", serialize_config(calibrated));
  os << "written to " << (out / "calibrated.json").string() << "\n";
  return kOk;
}

int execute(const CommandSpec& spec, std::ostream& os, std::ostream& err) {
  std::ostringstream sink;
  std::ostream& out = spec.quiet ? sink : os;
  try {
    ScenarioConfig config = load_config(spec.config);
    if (spec.seed) config.sim.seed = *spec.seed;
    const fs::path dir = output_directory(spec, config);
    if (spec.subcommand == "design") return cmd_design(config, spec.out, out);
    if (spec.subcommand == "simulate") return cmd_simulate(config, dir, out);
    if (spec.subcommand == "analyze") return cmd_analyze(config, spec.trace ? *spec.trace : dir, dir, out);
    if (spec.subcommand == "sweep") return cmd_sweep(config, spec.seeds, dir, out);
    err << "unknown subcommand '" << spec.subcommand << "'\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == Errc::ConfigError) return kUsage;
    return is_design_error(e.code()) ? kDesignFailure : kRuntimeFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Observer-based thruster fault isolation and control re-allocation"};
  app.require_subcommand(1);
  CommandSpec spec;
  std::string config;
  std::string out;
  std::string trace;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides " + std::string(kOutputEnv) + ")");
    sub->add_option("--seed", seed, "disturbance seed override");
    sub->add_flag("--quiet", spec.quiet, "suppress the printed summary");
  };
  auto* design = app.add_subcommand("design", "synthesize the observer banks and check them");
  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write CSV traces");
  auto* analyze = app.add_subcommand("analyze", "re-run fault isolation on logged residuals");
  auto* sweep = app.add_subcommand("sweep", "calibrate absolute thresholds over fault-free seeds");
  for (auto* sub : {design, simulate, analyze, sweep}) common(sub);
  analyze->add_option("--trace", trace, "directory of a previous simulate run");
  sweep->add_option("--seeds", spec.seeds, "number of seeds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spec.subcommand = app.get_subcommands().front()->get_name();
  spec.config = config;
  if (!out.empty()) spec.out = out;
  if (!trace.empty()) spec.trace = trace;
  if (app.get_subcommands().front()->count("--seed") > 0) spec.seed = seed;
  return execute(spec, std::cout, std::cerr);
}

}  // namespace cofd::cli
