#include "cofd/config.hpp"

#include <set>

#include <json.hpp>

#include "cofd/csv.hpp"

namespace cofd {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& message) {
  throw Error(Errc::ConfigError, where + ": " + message);
}

// Object view that records which keys were read so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  const Json* find(const std::string& key) {
    used_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(where(key), "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(where(key), "expected an integer");
    return v->get<int>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(where(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(where(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(where(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!used_.contains(key)) fail(path_, "unknown key '" + key + "'");
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> numbers(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::string> strings(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) fail(where, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<std::vector<int>> index_lists(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of integer arrays");
  std::vector<std::vector<int>> out;
  for (const auto& row : v) {
    if (!row.is_array()) fail(where, "expected an array of integer arrays");
    std::vector<int> list;
    for (const auto& e : row) {
      if (!e.is_number_integer()) fail(where, "expected integers");
      list.push_back(e.get<int>());
    }
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<std::vector<double>> number_lists(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of number arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) out.push_back(numbers(row, where));
  return out;
}

Matrix matrix(const Json& v, const std::string& where) {
  const auto rows = number_lists(v, where);
  if (rows.empty()) return Matrix();
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) fail(where, "ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> name_pairs(const Json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of name pairs");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : v) {
    const auto names = strings(e, where);
    if (names.size() != 2) fail(where, "each pair names exactly two units");
    out.emplace_back(names[0], names[1]);
  }
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
  Json out = Json::array();
  for (const auto& [a, b] : pairs) out.push_back(Json::array({a, b}));
  return out;
}

template <class T>
Json list(const std::vector<T>& values) {
  Json out = Json::array();
  for (const auto& v : values) out.push_back(v);
  return out;
}

Json index_json(const std::optional<std::vector<std::vector<int>>>& indices) {
  if (!indices) return nullptr;
  return Json(*indices);
}

template <class Enum, std::size_t N>
Enum pick(const std::string& value, const std::array<std::pair<const char*, Enum>, N>& table, const std::string& where) {
  for (const auto& [name, e] : table) {
    if (value == name) return e;
  }
  std::string options;
  for (const auto& [name, e] : table) options += std::string(options.empty() ? "" : ", ") + name;
  fail(where, "expected one of " + options);
}

template <class Enum, std::size_t N>
std::string name_of(Enum value, const std::array<std::pair<const char*, Enum>, N>& table) {
  for (const auto& [name, e] : table) {
    if (e == value) return name;
  }
  return table.front().first;
}

constexpr std::array<std::pair<const char*, PlantSpec::Kind>, 2> kPlantKinds{
    {{"vessel", PlantSpec::Kind::Vessel}, {"custom", PlantSpec::Kind::Custom}}};
constexpr std::array<std::pair<const char*, FaultProfile::Mode>, 2> kFaultModes{
    {{"actuator", FaultProfile::Mode::PerActuator}, {"cluster", FaultProfile::Mode::PerCluster}}};
constexpr std::array<std::pair<const char*, Effectiveness::Kind>, 3> kEffects{
    {{"constant", Effectiveness::Kind::Constant},
     {"exponential", Effectiveness::Kind::Exponential},
     {"ramp", Effectiveness::Kind::Ramp}}};
constexpr std::array<std::pair<const char*, ReconfigurationSpec::Mode>, 3> kReconfModes{
    {{"off", ReconfigurationSpec::Mode::Off},
     {"auto", ReconfigurationSpec::Mode::Auto},
     {"fixed", ReconfigurationSpec::Mode::Fixed}}};
constexpr std::array<std::pair<const char*, ReconfigurationScope>, 2> kScopes{
    {{"isolated", ReconfigurationScope::IsolatedOnly}, {"group", ReconfigurationScope::AuxiliaryGroup}}};
constexpr std::array<std::pair<const char*, RatioReference>, 2> kReferences{
    {{"first", RatioReference::First}, {"last", RatioReference::Last}}};

void parse_vessel(Section s, VesselParams& v) {
  v.mass = s.number("mass", v.mass);
  v.length = s.number("length", v.length);
  v.width = s.number("width", v.width);
  if (const Json* j = s.find("inertia")) {
    const Matrix m = matrix(*j, s.where("inertia"));
    if (m.rows() != 3 || m.cols() != 3) fail(s.where("inertia"), "expected a 3x3 matrix");
    v.inertia = m;
  }
  if (const Json* j = s.find("damping")) {
    const Matrix m = matrix(*j, s.where("damping"));
    if (m.rows() != 3 || m.cols() != 3) fail(s.where("damping"), "expected a 3x3 matrix");
    v.damping = m;
  }
  for (const char* key : {"distances", "angles"}) {
    if (const Json* j = s.find(key)) {
      const auto values = numbers(*j, s.where(key));
      if (values.size() != 5) fail(s.where(key), "expected 5 entries");
      auto& target = std::string(key) == "distances" ? v.distances : v.angles;
      std::copy(values.begin(), values.end(), target.begin());
    }
  }
  v.reference_heading = s.number("reference_heading", v.reference_heading);
  v.disturbance_bound = s.number("disturbance_bound", v.disturbance_bound);
  s.finish();
}

void parse_plant(Section s, PlantSpec& p) {
  p.kind = pick(s.text("kind", name_of(p.kind, kPlantKinds)), kPlantKinds, s.where("kind"));
  for (const char* key : {"A", "B", "C", "G", "feedback"}) {
    if (const Json* j = s.find(key)) {
      Matrix m = matrix(*j, s.where(key));
      const std::string k = key;
      (k == "A" ? p.A : k == "B" ? p.B : k == "C" ? p.C : k == "G" ? p.G : p.feedback) = std::move(m);
    }
  }
  if (const Json* j = s.find("units")) p.units = index_lists(*j, s.where("units"));
  if (const Json* j = s.find("unit_names")) p.unit_names = strings(*j, s.where("unit_names"));
  if (const Json* j = s.find("x0")) {
    const auto values = numbers(*j, s.where("x0"));
    p.x0 = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  s.finish();
  if (p.kind == PlantSpec::Kind::Custom && (p.A.size() == 0 || p.B.size() == 0 || p.C.size() == 0 || p.G.size() == 0)) {
    fail("plant", "custom plants need A, B, C and G");
  }
}

void parse_common_mode(Section s, CommonModeSpec& mode) {
  if (const Json* j = s.find("clusters")) mode.clusters = index_lists(*j, s.where("clusters"));
  if (const Json* j = s.find("names")) mode.names = strings(*j, s.where("names"));
  if (const Json* j = s.find("zeta")) {
    if (j->is_string()) {
      if (j->get<std::string>() != "snapshot") fail(s.where("zeta"), "expected \"snapshot\" or coefficient lists");
      mode.zeta.kind = ZetaPolicy::Kind::Snapshot;
    } else {
      mode.zeta.kind = ZetaPolicy::Kind::Fixed;
      mode.zeta.fixed = number_lists(*j, s.where("zeta"));
    }
  }
  mode.zeta.reference =
      pick(s.text("zeta_reference", name_of(mode.zeta.reference, kReferences)), kReferences, s.where("zeta_reference"));
  mode.zeta.floor = s.number("zeta_floor", mode.zeta.floor);
  if (const Json* j = s.find("indices")) mode.indices = index_lists(*j, s.where("indices"));
  if (const Json* j = s.find("pairs")) mode.pairs = name_pairs(*j, s.where("pairs"));
  s.finish();
}

void parse_bank(Section s, BankSpec& b) {
  if (const Json* j = s.find("indices")) b.indices = index_lists(*j, s.where("indices"));
  if (const Json* j = s.find("target_eigenvalues")) b.target_eigenvalues = numbers(*j, s.where("target_eigenvalues"));
  if (const Json* j = s.find("complement_eigenvalues")) {
    b.complement_eigenvalues = numbers(*j, s.where("complement_eigenvalues"));
  }
  if (const Json* j = s.find("pairs")) b.pairs = name_pairs(*j, s.where("pairs"));
  if (const Json* j = s.find("common_modes")) {
    if (!j->is_array()) fail(s.where("common_modes"), "expected an array");
    for (std::size_t i = 0; i < j->size(); ++i) {
      CommonModeSpec mode;
      parse_common_mode(Section((*j)[i], s.where("common_modes") + "[" + std::to_string(i) + "]"), mode);
      b.common_modes.push_back(std::move(mode));
    }
  }
  s.finish();
}

ClusterSpec units_of(const PlantSpec& p) {
  if (!p.units.empty()) return ClusterSpec::from_groups(p.units, p.unit_names);
  if (p.kind == PlantSpec::Kind::Vessel) return vessel_thruster_clusters();
  return ClusterSpec::singletons(static_cast<int>(p.G.cols()));
}

void parse_faults(Section s, FaultProfile& f, const PlantSpec& plant) {
  f.mode = pick(s.text("mode", name_of(f.mode, kFaultModes)), kFaultModes, s.where("mode"));
  if (const Json* j = s.find("entries")) {
    if (!j->is_array()) fail(s.where("entries"), "expected an array");
    for (std::size_t i = 0; i < j->size(); ++i) {
      Section e((*j)[i], s.where("entries") + "[" + std::to_string(i) + "]");
      FaultEntry entry;
      if (const Json* t = e.find("target")) {
        if (t->is_number_integer()) {
          entry.target = t->get<int>();
        } else if (t->is_string() && f.mode == FaultProfile::Mode::PerCluster) {
          entry.target = units_of(plant).find(t->get<std::string>());
          if (entry.target == 0) fail(e.where("target"), "unknown unit '" + t->get<std::string>() + "'");
        } else {
          fail(e.where("target"), "expected an index (or a unit name in cluster mode)");
        }
      } else {
        fail(e.where("target"), "missing");
      }
      entry.effect.kind = pick(e.text("effect", "constant"), kEffects, e.where("effect"));
      entry.effect.parameter = e.number("parameter", entry.effect.parameter);
      entry.onset = e.number("onset", entry.onset);
      e.finish();
      f.entries.push_back(entry);
    }
  }
  s.finish();
}

void parse_fdi(Section s, FdiSpec& f) {
  if (const Json* j = s.find("theta_abs")) {
    const auto values = j->is_number() ? std::vector<double>{j->get<double>()} : numbers(*j, s.where("theta_abs"));
    if (values.empty()) fail(s.where("theta_abs"), "needs at least one value");
    f.policy.theta_abs = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  f.policy.theta_rel = s.number("theta_rel", f.policy.theta_rel);
  f.policy.window = s.integer("window", f.policy.window);
  f.policy.persistence = s.integer("persistence", f.policy.persistence);
  if (const Json* j = s.find("warmup")) {
    if (!j->is_number()) fail(s.where("warmup"), "expected a number or null");
    f.policy.warmup = j->get<double>();
  }
  f.escalation.enabled = s.boolean("escalation", f.escalation.enabled);
  f.escalation.dwell = s.number("dwell", f.escalation.dwell);
  f.start_phase = s.integer("start_phase", f.start_phase);
  s.finish();
}

void parse_sim(Section s, SimSpec& sim) {
  sim.dt = s.number("dt", sim.dt);
  sim.duration = s.number("duration", sim.duration);
  sim.seed = s.unsigned_integer("seed", sim.seed);
  if (const Json* j = s.find("control")) {
    Section c(*j, s.where("control"));
    sim.control.kp = c.number("kp", sim.control.kp);
    sim.control.ki = c.number("ki", sim.control.ki);
    sim.control.kd = c.number("kd", sim.control.kd);
    sim.control.integral_limit = c.number("integral_limit", sim.control.integral_limit);
    sim.control.tracking = c.boolean("tracking", sim.control.tracking);
    if (const Json* g = c.find("tracking_gains")) {
      const auto values = numbers(*g, c.where("tracking_gains"));
      if (values.size() != 2) fail(c.where("tracking_gains"), "expected surge and sway gains");
      sim.control.tracking_gains = {values[0], values[1]};
    }
    c.finish();
  }
  if (const Json* j = s.find("disturbance")) {
    Section d(*j, s.where("disturbance"));
    auto& m = sim.disturbance;
    m.enabled = d.boolean("enabled", m.enabled);
    m.bound = d.number("bound", m.bound);
    m.constant_fraction = d.number("constant_fraction", m.constant_fraction);
    m.oscillating_fraction = d.number("oscillating_fraction", m.oscillating_fraction);
    m.frequency = d.number("frequency", m.frequency);
    m.rotation_rate = d.number("rotation_rate", m.rotation_rate);
    d.finish();
  }
  if (const Json* j = s.find("reconfiguration")) {
    Section r(*j, s.where("reconfiguration"));
    auto& rc = sim.reconfiguration;
    rc.mode = pick(r.text("mode", name_of(rc.mode, kReconfModes)), kReconfModes, r.where("mode"));
    rc.time = r.number("time", rc.time);
    rc.scope = pick(r.text("scope", name_of(rc.scope, kScopes)), kScopes, r.where("scope"));
    if (const Json* g = r.find("groups")) rc.groups = index_lists(*g, r.where("groups"));
    if (const Json* t = r.find("targets")) rc.targets = strings(*t, r.where("targets"));
    r.finish();
  }
  s.finish();
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  ScenarioConfig config;
  Section top(root, "config");
  try {
    if (const Json* j = top.find("vessel")) parse_vessel(Section(*j, "vessel"), config.plant.vessel);
    if (const Json* j = top.find("plant")) parse_plant(Section(*j, "plant"), config.plant);
    if (const Json* j = top.find("bank")) parse_bank(Section(*j, "bank"), config.bank);
    if (const Json* j = top.find("faults")) parse_faults(Section(*j, "faults"), config.faults, config.plant);
    if (const Json* j = top.find("fdi")) parse_fdi(Section(*j, "fdi"), config.fdi);
    if (const Json* j = top.find("sim")) parse_sim(Section(*j, "sim"), config.sim);
    if (const Json* j = top.find("outputs")) {
      Section o(*j, "outputs");
      config.outputs.directory = o.text("directory", config.outputs.directory);
      o.finish();
    }
    top.finish();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  config.validate();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) { return parse_config(csv::read_file(path)); }

std::string serialize_config(const ScenarioConfig& c) {
  Json root;
  const auto& v = c.plant.vessel;
  root["vessel"] = {{"mass", v.mass},
                    {"length", v.length},
                    {"width", v.width},
                    {"inertia", to_json(Matrix(v.inertia))},
                    {"damping", to_json(Matrix(v.damping))},
                    {"distances", list(std::vector<double>(v.distances.begin(), v.distances.end()))},
                    {"angles", list(std::vector<double>(v.angles.begin(), v.angles.end()))},
                    {"reference_heading", v.reference_heading},
                    {"disturbance_bound", v.disturbance_bound}};
  const auto& p = c.plant;
  root["plant"] = {{"kind", name_of(p.kind, kPlantKinds)},
                   {"A", to_json(p.A)},
                   {"B", to_json(p.B)},
                   {"C", to_json(p.C)},
                   {"G", to_json(p.G)},
                   {"feedback", to_json(p.feedback)},
                   {"units", Json(p.units)},
                   {"unit_names", list(p.unit_names)},
                   {"x0", to_json(p.x0)}};
  Json modes = Json::array();
  for (const auto& mode : c.bank.common_modes) {
    Json zeta = mode.zeta.kind == ZetaPolicy::Kind::Snapshot ? Json("snapshot") : Json(mode.zeta.fixed);
    modes.push_back({{"clusters", Json(mode.clusters)},
                     {"names", list(mode.names)},
                     {"zeta", zeta},
                     {"zeta_reference", name_of(mode.zeta.reference, kReferences)},
                     {"zeta_floor", mode.zeta.floor},
                     {"indices", index_json(mode.indices)},
                     {"pairs", to_json(mode.pairs)}});
  }
  root["bank"] = {{"indices", index_json(c.bank.indices)},
                  {"target_eigenvalues", list(c.bank.target_eigenvalues)},
                  {"complement_eigenvalues", list(c.bank.complement_eigenvalues)},
                  {"pairs", to_json(c.bank.pairs)},
                  {"common_modes", modes}};
  Json entries = Json::array();
  for (const auto& e : c.faults.entries) {
    entries.push_back({{"target", e.target},
                       {"effect", name_of(e.effect.kind, kEffects)},
                       {"parameter", e.effect.parameter},
                       {"onset", e.onset}});
  }
  root["faults"] = {{"mode", name_of(c.faults.mode, kFaultModes)}, {"entries", entries}};
  const auto& f = c.fdi;
  root["fdi"] = {{"theta_abs", to_json(f.policy.theta_abs)},
                 {"theta_rel", f.policy.theta_rel},
                 {"window", f.policy.window},
                 {"persistence", f.policy.persistence},
                 {"warmup", f.policy.warmup ? Json(*f.policy.warmup) : Json(nullptr)},
                 {"escalation", f.escalation.enabled},
                 {"dwell", f.escalation.dwell},
                 {"start_phase", f.start_phase}};
  const auto& s = c.sim;
  root["sim"] = {
      {"dt", s.dt},
      {"duration", s.duration},
      {"seed", s.seed},
      {"control",
       {{"kp", s.control.kp},
        {"ki", s.control.ki},
        {"kd", s.control.kd},
        {"integral_limit", s.control.integral_limit},
        {"tracking", s.control.tracking},
        {"tracking_gains", Json::array({s.control.tracking_gains[0], s.control.tracking_gains[1]})}}},
      {"disturbance",
       {{"enabled", s.disturbance.enabled},
        {"bound", s.disturbance.bound},
        {"constant_fraction", s.disturbance.constant_fraction},
        {"oscillating_fraction", s.disturbance.oscillating_fraction},
        {"frequency", s.disturbance.frequency},
        {"rotation_rate", s.disturbance.rotation_rate}}},
      {"reconfiguration",
       {{"mode", name_of(s.reconfiguration.mode, kReconfModes)},
        {"time", s.reconfiguration.time},
        {"scope", name_of(s.reconfiguration.scope, kScopes)},
        {"groups", Json(s.reconfiguration.groups)},
        {"targets", list(s.reconfiguration.targets)}}}};
  root["outputs"] = {{"directory", c.outputs.directory}};
  return root.dump(2) + "\n";
}

ScenarioConfig case_study_config() {
  ScenarioConfig c;
  c.plant.kind = PlantSpec::Kind::Vessel;
  c.plant.x0 = Vector(6);
  c.plant.x0 << 1.0, 1.0, 0.0, 2.2, 1.9, 0.0;
  c.bank.indices = std::vector<std::vector<int>>{{1, 2, 3}, {3, 4, 1}, {5, 6, 1}, {7, 8, 1}};
  CommonModeSpec thrusters;
  thrusters.clusters = {{1, 2}, {3, 4}, {5, 6}, {7}, {8}};
  thrusters.names = {"T1", "T2", "T3", "T4", "T5"};
  thrusters.zeta.kind = ZetaPolicy::Kind::Fixed;
  thrusters.zeta.fixed = {{2.27}, {3.41}, {1.38}};
  thrusters.indices = std::vector<std::vector<int>>{{1, 2, 3}, {1, 4, 5}, {2, 3, 4}, {2, 3, 5}};
  thrusters.pairs = {{"T2", "T5"}};
  c.bank.common_modes.push_back(thrusters);
  c.faults.mode = FaultProfile::Mode::PerCluster;
  c.faults.entries.push_back({1, Effectiveness::exponential(0.03), 0.0});
  c.fdi.escalation.enabled = true;
  return c;
}

}  // namespace cofd
