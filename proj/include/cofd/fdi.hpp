#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cofd/allocation.hpp"
#include "cofd/observers.hpp"

namespace cofd {

struct ThresholdPolicy {
  Vector theta_abs = Vector::Constant(1, 1e-6);  // per output channel; one entry broadcasts
  double theta_rel = 1e-3;
  int window = 200;       // samples per evaluation
  int persistence = 3;    // identical consecutive evaluations before a decision changes
  std::optional<double> warmup;  // seconds; default 5 / |slowest observer eigenvalue|

  void validate() const;
  double absolute_floor(int channel) const;
};

// Significant (1) / negligible (0) per monitored direction e_1..e_k0.
using Pattern = std::vector<std::uint8_t>;

std::string pattern_string(const Pattern& pattern);

// Component q is significant iff its RMS over the window exceeds
// max(theta_abs[q], theta_rel * RMS(|r|)). Needs a full window.
Pattern classify_components(std::span<const Vector> samples, const ThresholdPolicy& policy, int k0);

// A fault hypothesis over columns of a bank's input matrix. `units` are the
// plant-level effectors (clusters) it stands for.
struct Hypothesis {
  std::string id;
  std::vector<int> columns;
  std::vector<int> units;
};

enum class Expectation : std::uint8_t { Zero, Nonzero, Any };

struct SignatureTable {
  int k0 = 0;
  std::vector<MultiIndex> indices;  // one per observer
  std::vector<Hypothesis> hypotheses;
  // patterns[hypothesis][observer][direction]
  std::vector<std::vector<std::vector<Expectation>>> patterns;

  int find(const std::string& id) const;
  bool matches(std::size_t hypothesis, const std::vector<Pattern>& observed) const;
};

// Columns of the hypothesis that sit in J_h map to nonzero components; if the
// hypothesis lies entirely inside J_h the remaining components are zero,
// otherwise they are unconstrained.
SignatureTable build_signature_table(const std::vector<MultiIndex>& indices, int domain,
                                     const std::vector<Hypothesis>& hypotheses);
SignatureTable build_signature_table(const ObserverBank& bank, const std::vector<Hypothesis>& hypotheses);

// Pairs of hypotheses no observer can tell apart.
std::vector<std::pair<std::string, std::string>> indistinguishable_pairs(const SignatureTable& table);

// Single-unit hypotheses for every cluster, plus the listed unit pairs
// (1-based cluster ids). Columns are actuator indices in actuator mode and
// cluster indices in cluster mode.
std::vector<Hypothesis> unit_hypotheses(const ClusterSpec& units, BankMode mode,
                                        const std::vector<std::pair<int, int>>& pairs = {});

enum class Status { Nominal, Detected, Isolated, Ambiguous, Saturated };

std::string_view to_string(Status status);
Status status_from_string(std::string_view name);

struct Decision {
  double time = 0.0;
  int phase = 0;
  Status status = Status::Nominal;
  std::vector<std::string> hypotheses;
  std::vector<Pattern> signatures;  // per observer
  bool escalate = false;
};

Decision isolate(const std::vector<Pattern>& observed, const SignatureTable& table, double time = 0.0);

struct PhaseSetup {
  SignatureTable table;
  double warmup = 5.0;
};

struct EscalationPolicy {
  bool enabled = false;
  double dwell = 30.0;  // seconds in a common mode before switching to the next
};

// Deterministic residual evaluation state machine. Phase 0 runs the base
// bank; phase j >= 1 runs common mode ((j - 1) mod modes). A phase change
// restarts the warm-up.
class FdiEngine {
 public:
  FdiEngine(std::vector<PhaseSetup> phases, ThresholdPolicy policy, EscalationPolicy escalation);

  // Returns a decision at the end of every evaluation window.
  std::optional<Decision> feed(double time, int phase, const std::vector<Vector>& residuals);

  const Decision& current() const noexcept { return reported_; }
  const std::vector<Decision>& log() const noexcept { return log_; }
  const PhaseSetup& setup_for(int phase) const;
  int common_modes() const noexcept { return static_cast<int>(phases_.size()) - 1; }

 private:
  void reset(double time, int phase);

  std::vector<PhaseSetup> phases_;
  ThresholdPolicy policy_;
  EscalationPolicy escalation_;

  bool started_ = false;
  int phase_ = 0;
  double phase_start_ = 0.0;
  double warmup_end_ = 0.0;
  std::vector<std::vector<Vector>> window_;  // per observer
  Decision candidate_;
  int candidate_count_ = 0;
  Decision reported_;
  std::vector<Decision> log_;
};

// Ratio constraints and the cluster-bank request that follow a saturated or
// ambiguous actuator-level decision.
struct EscalationPlan {
  RatioConstraintSet ratios;
  BankRequest request;
  Matrix input_matrix;  // W* (or W when nothing is clustered)
  bool no_op = false;
};

struct ZetaPolicy {
  enum class Kind { Fixed, Snapshot };
  Kind kind = Kind::Snapshot;
  std::vector<std::vector<double>> fixed;
  RatioReference reference = RatioReference::Last;
  double floor = 1e-6;
};

EscalationPlan escalate_to_cluster_mode(const LtiPlant& plant, const Vector& u_snapshot, const ClusterSpec& clusters,
                                        const ZetaPolicy& zeta, const std::vector<MultiIndex>& cluster_indices);

enum class ReconfigurationScope { IsolatedOnly, AuxiliaryGroup };

struct ReconfigurationDirective {
  std::vector<int> units;    // cluster ids switched off
  std::vector<int> zeroed;   // actuator indices
  AllocationLaw law;
  double time = 0.0;
};

ReconfigurationDirective trigger_reconfiguration(const Decision& decision, const SignatureTable& table,
                                                 const ClusterSpec& units, const Matrix& g,
                                                 ReconfigurationScope scope = ReconfigurationScope::IsolatedOnly,
                                                 const std::vector<std::vector<int>>& auxiliary_groups = {});

// Same, for an explicit list of units (fixed-time reconfiguration).
ReconfigurationDirective reconfigure_units(std::vector<int> units, const ClusterSpec& clusters, const Matrix& g,
                                           double time);

}  // namespace cofd
