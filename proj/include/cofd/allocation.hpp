#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cofd/plant.hpp"

namespace cofd {

struct AllocationResult {
  Vector u;
  Vector effect;  // G * u
  bool exact = true;
  std::vector<int> zeroed;  // 1-based actuator indices forced to zero
};

// Ratio ties inside one cluster: u_member = zeta * u_reference.
struct RatioGroup {
  int cluster = 0;    // 1-based cluster id
  int reference = 0;  // 1-based actuator index
  std::vector<int> members;
  std::vector<double> zeta;
};

enum class RatioReference { First, Last };

class RatioConstraintSet {
 public:
  RatioConstraintSet() = default;

  // One coefficient list per multi-member cluster, in cluster order, each of
  // length (cardinality - 1). Members are the non-reference indices in
  // ascending order.
  static RatioConstraintSet from_coefficients(const ClusterSpec& clusters,
                                              const std::vector<std::vector<double>>& zeta,
                                              RatioReference reference = RatioReference::Last);

  // zeta = u_member / u_reference from an input snapshot; |u_reference| below
  // the floor falls back to zeta = 1.
  static RatioConstraintSet from_snapshot(const ClusterSpec& clusters, const Vector& u,
                                          RatioReference reference = RatioReference::Last,
                                          double floor = 1e-6);

  const std::vector<RatioGroup>& groups() const noexcept { return groups_; }
  const RatioGroup* group_for(int cluster) const;
  bool empty() const noexcept { return groups_.empty(); }
  // Flattened coefficient lists in cluster order.
  std::vector<std::vector<double>> coefficients() const;

 private:
  std::vector<RatioGroup> groups_;
};

AllocationResult allocate_nominal(const Matrix& g, const Vector& tau);

AllocationResult reallocate_reduced(const Matrix& g, const std::vector<int>& faulty, const Vector& tau);

// Column h: w_ref + sum_j zeta_j w_j over cluster h. Works on W (n x m) or on
// G (k x m) alike.
Matrix cluster_overall_columns(const Matrix& w, const ClusterSpec& clusters, const RatioConstraintSet& ratios);

AllocationResult allocate_with_ratios(const Matrix& g, const ClusterSpec& clusters, const RatioConstraintSet& ratios,
                                      const Vector& tau);

// Set when the ratio constraints leave fewer free magnitudes than effects.
std::optional<std::string> ratio_redundancy_warning(const ClusterSpec& clusters, int k);

// Precomputed allocation used inside the simulation loop. The free
// functions above are thin wrappers around it.
class AllocationLaw {
 public:
  enum class Kind { Nominal, Reduced, Ratio };

  static AllocationLaw nominal(const Matrix& g);
  static AllocationLaw reduced(const Matrix& g, std::vector<int> faulty);
  static AllocationLaw with_ratios(const Matrix& g, const ClusterSpec& clusters, const RatioConstraintSet& ratios);

  AllocationResult apply(const Vector& tau) const;

  Kind kind() const noexcept { return kind_; }
  const std::vector<int>& zeroed() const noexcept { return zeroed_; }
  const Matrix& allocation_matrix() const noexcept { return g_; }
  const RatioConstraintSet& ratios() const noexcept { return ratios_; }

 private:
  Kind kind_ = Kind::Nominal;
  Matrix g_;
  Matrix solve_;               // pseudo-inverse of the active reduced matrix
  std::vector<int> active_;    // Nominal/Reduced: actuator index per row of solve_
  std::vector<int> zeroed_;
  ClusterSpec clusters_;
  RatioConstraintSet ratios_;  // Ratio: magnitude h drives cluster h
};

std::string_view to_string(AllocationLaw::Kind kind);

}  // namespace cofd
