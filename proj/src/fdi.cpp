#include "cofd/fdi.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cofd {

void ThresholdPolicy::validate() const {
  if (theta_abs.size() == 0 || !(theta_abs.array() > 0.0).all()) {
    throw Error(Errc::InvalidArgument, "absolute thresholds must be positive");
  }
  if (!(theta_rel > 0.0 && theta_rel < 1.0)) {
    throw Error(Errc::InvalidArgument, "relative threshold must lie in (0, 1)");
  }
  if (window < 1 || persistence < 1) {
    throw Error(Errc::InvalidArgument, "window and persistence must be at least 1");
  }
  if (warmup && *warmup < 0.0) {
    throw Error(Errc::InvalidArgument, "warm-up must be non-negative");
  }
}

double ThresholdPolicy::absolute_floor(int channel) const {
  if (theta_abs.size() == 1) return theta_abs(0);
  if (channel < 0 || channel >= theta_abs.size()) {
    throw Error(Errc::IndexOutOfRange, "no absolute threshold for channel " + std::to_string(channel));
  }
  return theta_abs(channel);
}

std::string pattern_string(const Pattern& pattern) {
  std::string out;
  for (auto bit : pattern) out.push_back(bit ? '1' : '0');
  return out;
}

Pattern classify_components(std::span<const Vector> samples, const ThresholdPolicy& policy, int k0) {
  if (static_cast<int>(samples.size()) < policy.window) {
    throw Error(Errc::WarmupIncomplete, "need " + std::to_string(policy.window) + " samples, have " +
                                            std::to_string(samples.size()));
  }
  const auto tail = samples.subspan(samples.size() - static_cast<std::size_t>(policy.window));
  const auto count = static_cast<double>(tail.size());
  Vector sum_sq = Vector::Zero(tail.front().size());
  for (const auto& r : tail) sum_sq += r.cwiseAbs2();
  const double norm_rms = std::sqrt(sum_sq.sum() / count);
  Pattern pattern(static_cast<std::size_t>(k0), 0);
  for (int q = 0; q < k0; ++q) {
    const double rms = std::sqrt(sum_sq(q) / count);
    const double threshold = std::max(policy.absolute_floor(q), policy.theta_rel * norm_rms);
    pattern[static_cast<std::size_t>(q)] = rms > threshold ? 1 : 0;
  }
  return pattern;
}

int SignatureTable::find(const std::string& id) const {
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (hypotheses[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

bool SignatureTable::matches(std::size_t hypothesis, const std::vector<Pattern>& observed) const {
  const auto& expected = patterns.at(hypothesis);
  for (std::size_t h = 0; h < expected.size(); ++h) {
    for (std::size_t q = 0; q < expected[h].size(); ++q) {
      const bool significant = observed[h][q] != 0;
      if (expected[h][q] == Expectation::Zero && significant) return false;
      if (expected[h][q] == Expectation::Nonzero && !significant) return false;
    }
  }
  return true;
}

SignatureTable build_signature_table(const std::vector<MultiIndex>& indices, int domain,
                                     const std::vector<Hypothesis>& hypotheses) {
  SignatureTable table;
  table.indices = indices;
  table.hypotheses = hypotheses;
  table.k0 = indices.empty() ? 0 : indices.front().length();
  for (const auto& hyp : hypotheses) {
    if (hyp.columns.empty()) {
      throw Error(Errc::UnknownHypothesis, "hypothesis '" + hyp.id + "' names no columns");
    }
    for (int c : hyp.columns) {
      if (c < 1 || c > domain) {
        throw Error(Errc::UnknownHypothesis, "hypothesis '" + hyp.id + "' references column " + std::to_string(c));
      }
    }
    std::vector<std::vector<Expectation>> per_observer;
    for (const auto& j : indices) {
      const bool inside = std::all_of(hyp.columns.begin(), hyp.columns.end(), [&](int c) { return j.contains(c); });
      std::vector<Expectation> directions;
      for (int q = 0; q < j.length(); ++q) {
        const bool hit = std::find(hyp.columns.begin(), hyp.columns.end(), j[q]) != hyp.columns.end();
        directions.push_back(hit ? Expectation::Nonzero : (inside ? Expectation::Zero : Expectation::Any));
      }
      per_observer.push_back(std::move(directions));
    }
    table.patterns.push_back(std::move(per_observer));
  }
  return table;
}

SignatureTable build_signature_table(const ObserverBank& bank, const std::vector<Hypothesis>& hypotheses) {
  std::vector<MultiIndex> indices;
  for (const auto& obs : bank.observers) indices.push_back(obs.J);
  return build_signature_table(indices, static_cast<int>(bank.input_matrix.cols()), hypotheses);
}

std::vector<std::pair<std::string, std::string>> indistinguishable_pairs(const SignatureTable& table) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t a = 0; a < table.hypotheses.size(); ++a) {
    for (std::size_t b = a + 1; b < table.hypotheses.size(); ++b) {
      bool separated = false;
      for (std::size_t h = 0; h < table.indices.size() && !separated; ++h) {
        for (std::size_t q = 0; q < table.patterns[a][h].size(); ++q) {
          const auto x = table.patterns[a][h][q];
          const auto y = table.patterns[b][h][q];
          if ((x == Expectation::Zero && y == Expectation::Nonzero) ||
              (x == Expectation::Nonzero && y == Expectation::Zero)) {
            separated = true;
            break;
          }
        }
      }
      if (!separated) out.emplace_back(table.hypotheses[a].id, table.hypotheses[b].id);
    }
  }
  return out;
}

std::vector<Hypothesis> unit_hypotheses(const ClusterSpec& units, BankMode mode,
                                        const std::vector<std::pair<int, int>>& pairs) {
  auto columns_of = [&](int unit) {
    if (unit < 1 || unit > units.q()) {
      throw Error(Errc::UnknownHypothesis, "unknown unit " + std::to_string(unit));
    }
    return mode == BankMode::Cluster ? std::vector<int>{unit} : units.group(unit);
  };
  std::vector<Hypothesis> out;
  for (int h = 1; h <= units.q(); ++h) out.push_back({units.name(h), columns_of(h), {h}});
  for (auto [a, b] : pairs) {
    if (a > b) std::swap(a, b);
    auto cols = columns_of(a);
    const auto more = columns_of(b);
    cols.insert(cols.end(), more.begin(), more.end());
    out.push_back({units.name(a) + "+" + units.name(b), cols, {a, b}});
  }
  return out;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Nominal: return "nominal";
    case Status::Detected: return "detected";
    case Status::Isolated: return "isolated";
    case Status::Ambiguous: return "ambiguous";
    case Status::Saturated: return "saturated";
  }
  return "nominal";
}

Status status_from_string(std::string_view name) {
  for (auto s : {Status::Nominal, Status::Detected, Status::Isolated, Status::Ambiguous, Status::Saturated}) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::SchemaMismatch, "unknown status '" + std::string(name) + "'");
}

Decision isolate(const std::vector<Pattern>& observed, const SignatureTable& table, double time) {
  if (observed.size() != table.indices.size()) {
    throw Error(Errc::DimensionMismatch, "one signature per observer is required");
  }
  Decision d;
  d.time = time;
  d.signatures = observed;
  bool any = false;
  bool all = true;
  for (const auto& p : observed) {
    for (auto bit : p) {
      any = any || bit;
      all = all && bit;
    }
  }
  if (!any) {
    d.status = Status::Nominal;
    return d;
  }
  for (std::size_t i = 0; i < table.hypotheses.size(); ++i) {
    if (table.matches(i, observed)) d.hypotheses.push_back(table.hypotheses[i].id);
  }
  if (all) {
    d.status = Status::Saturated;
  } else if (d.hypotheses.size() == 1) {
    d.status = Status::Isolated;
  } else if (d.hypotheses.empty()) {
    d.status = Status::Detected;
  } else {
    d.status = Status::Ambiguous;
  }
  return d;
}

FdiEngine::FdiEngine(std::vector<PhaseSetup> phases, ThresholdPolicy policy, EscalationPolicy escalation)
    : phases_(std::move(phases)), policy_(std::move(policy)), escalation_(escalation) {
  if (phases_.empty()) throw Error(Errc::InvalidArgument, "FDI engine needs at least one phase");
  policy_.validate();
}

const PhaseSetup& FdiEngine::setup_for(int phase) const {
  if (phase < 0) throw Error(Errc::InvalidArgument, "negative phase");
  if (phase == 0) return phases_.front();
  if (phases_.size() < 2) throw Error(Errc::InvalidArgument, "no common mode configured");
  return phases_[1 + static_cast<std::size_t>(phase - 1) % (phases_.size() - 1)];
}

void FdiEngine::reset(double time, int phase) {
  const auto& setup = setup_for(phase);
  started_ = true;
  phase_ = phase;
  phase_start_ = time;
  warmup_end_ = time + (policy_.warmup ? *policy_.warmup : setup.warmup);
  window_.assign(setup.table.indices.size(), {});
  candidate_ = Decision{};
  candidate_count_ = 0;
  reported_ = Decision{};
  reported_.time = time;
  reported_.phase = phase;
}

std::optional<Decision> FdiEngine::feed(double time, int phase, const std::vector<Vector>& residuals) {
  if (!started_ || phase != phase_) reset(time, phase);
  const auto& setup = setup_for(phase_);
  if (residuals.size() != window_.size()) {
    throw Error(Errc::DimensionMismatch, "residual count does not match the active bank");
  }
  if (time < warmup_end_) return std::nullopt;
  for (std::size_t h = 0; h < residuals.size(); ++h) window_[h].push_back(residuals[h]);
  if (static_cast<int>(window_.front().size()) < policy_.window) return std::nullopt;

  std::vector<Pattern> observed;
  for (const auto& samples : window_) observed.push_back(classify_components(samples, policy_, setup.table.k0));
  for (auto& samples : window_) samples.clear();

  Decision raw = isolate(observed, setup.table, time);
  if (candidate_count_ > 0 && raw.status == candidate_.status && raw.hypotheses == candidate_.hypotheses) {
    ++candidate_count_;
  } else {
    candidate_ = raw;
    candidate_count_ = 1;
  }
  if (candidate_count_ >= policy_.persistence) {
    reported_.status = candidate_.status;
    reported_.hypotheses = candidate_.hypotheses;
  }

  Decision out = reported_;
  out.time = time;
  out.phase = phase_;
  out.signatures = std::move(observed);
  const bool stuck = out.status == Status::Saturated || out.status == Status::Ambiguous;
  if (escalation_.enabled && stuck && common_modes() > 0) {
    out.escalate = phase_ == 0 || (common_modes() > 1 && time - phase_start_ >= escalation_.dwell);
  }
  log_.push_back(out);
  return out;
}

EscalationPlan escalate_to_cluster_mode(const LtiPlant& plant, const Vector& u_snapshot, const ClusterSpec& clusters,
                                        const ZetaPolicy& zeta, const std::vector<MultiIndex>& cluster_indices) {
  EscalationPlan plan;
  if (clusters.all_singletons()) {
    plan.no_op = true;
    plan.input_matrix = plant.W;
    plan.request.mode = BankMode::Actuator;
    return plan;
  }
  plan.ratios = zeta.kind == ZetaPolicy::Kind::Fixed
                    ? RatioConstraintSet::from_coefficients(clusters, zeta.fixed, zeta.reference)
                    : RatioConstraintSet::from_snapshot(clusters, u_snapshot, zeta.reference, zeta.floor);
  const Matrix g_star = cluster_overall_columns(plant.G, clusters, plan.ratios);
  if (matrixlab::numerical_rank(matrixlab::normalize_columns(g_star)).rank < plant.k()) {
    throw Error(Errc::InsufficientRedundancy, "ratio constraints over-constrain the allocation");
  }
  plan.input_matrix = cluster_overall_columns(plant.W, clusters, plan.ratios);
  plan.request.mode = BankMode::Cluster;
  if (!cluster_indices.empty()) plan.request.explicit_indices = cluster_indices;
  return plan;
}

ReconfigurationDirective reconfigure_units(std::vector<int> units, const ClusterSpec& clusters, const Matrix& g,
                                           double time) {
  std::sort(units.begin(), units.end());
  units.erase(std::unique(units.begin(), units.end()), units.end());
  std::vector<int> zeroed;
  for (int unit : units) {
    if (unit < 1 || unit > clusters.q()) throw Error(Errc::IndexOutOfRange, "unknown unit " + std::to_string(unit));
    const auto& group = clusters.group(unit);
    zeroed.insert(zeroed.end(), group.begin(), group.end());
  }
  std::sort(zeroed.begin(), zeroed.end());
  ReconfigurationDirective directive{units, zeroed, AllocationLaw::reduced(g, zeroed), time};
  return directive;
}

ReconfigurationDirective trigger_reconfiguration(const Decision& decision, const SignatureTable& table,
                                                 const ClusterSpec& units, const Matrix& g, ReconfigurationScope scope,
                                                 const std::vector<std::vector<int>>& auxiliary_groups) {
  if (decision.status != Status::Isolated || decision.hypotheses.size() != 1) {
    throw Error(Errc::PreconditionFailed, "reconfiguration needs an isolated fault");
  }
  const int index = table.find(decision.hypotheses.front());
  if (index < 0) throw Error(Errc::UnknownHypothesis, "'" + decision.hypotheses.front() + "' is not in the table");
  std::vector<int> selected = table.hypotheses[static_cast<std::size_t>(index)].units;
  if (scope == ReconfigurationScope::AuxiliaryGroup) {
    std::set<int> expanded(selected.begin(), selected.end());
    for (const auto& group : auxiliary_groups) {
      if (std::any_of(group.begin(), group.end(), [&](int u) { return std::find(selected.begin(), selected.end(), u) != selected.end(); })) {
        expanded.insert(group.begin(), group.end());
      }
    }
    selected.assign(expanded.begin(), expanded.end());
  }
  return reconfigure_units(std::move(selected), units, g, decision.time);
}

}  // namespace cofd
