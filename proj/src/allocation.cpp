#include "cofd/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cofd/errors.hpp"

namespace cofd {

namespace {

RatioGroup make_group(const ClusterSpec& clusters, int h, RatioReference reference) {
  const auto& members = clusters.group(h);
  RatioGroup group;
  group.cluster = h;
  group.reference = reference == RatioReference::Last ? members.back() : members.front();
  for (int index : members) {
    if (index != group.reference) group.members.push_back(index);
  }
  return group;
}

bool is_exact(const Matrix& g, const Vector& u, const Vector& tau) {
  return ((g * u) - tau).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + tau.norm());
}

}  // namespace

RatioConstraintSet RatioConstraintSet::from_coefficients(const ClusterSpec& clusters,
                                                         const std::vector<std::vector<double>>& zeta,
                                                         RatioReference reference) {
  RatioConstraintSet set;
  std::size_t next = 0;
  for (int h = 1; h <= clusters.q(); ++h) {
    if (clusters.cardinality(h) == 1) continue;
    if (next >= zeta.size()) {
      throw Error(Errc::MissingCoefficients, "no ratio coefficients for cluster " + clusters.name(h));
    }
    RatioGroup group = make_group(clusters, h, reference);
    if (zeta[next].size() != group.members.size()) {
      throw Error(Errc::MissingCoefficients, "cluster " + clusters.name(h) + " needs " +
                                                 std::to_string(group.members.size()) + " coefficients");
    }
    for (double z : zeta[next]) {
      if (!std::isfinite(z)) throw Error(Errc::InvalidArgument, "ratio coefficients must be finite");
    }
    group.zeta = zeta[next++];
    set.groups_.push_back(std::move(group));
  }
  if (next != zeta.size()) {
    throw Error(Errc::InvalidArgument, "more coefficient lists than multi-member clusters");
  }
  return set;
}

RatioConstraintSet RatioConstraintSet::from_snapshot(const ClusterSpec& clusters, const Vector& u,
                                                     RatioReference reference, double floor) {
  if (u.size() != clusters.m()) {
    throw Error(Errc::DimensionMismatch, "input snapshot does not match the cluster partition");
  }
  std::vector<std::vector<double>> zeta;
  for (int h = 1; h <= clusters.q(); ++h) {
    if (clusters.cardinality(h) == 1) continue;
    const RatioGroup group = make_group(clusters, h, reference);
    const double ref = u(group.reference - 1);
    std::vector<double> coefficients;
    for (int member : group.members) {
      coefficients.push_back(std::abs(ref) < floor ? 1.0 : u(member - 1) / ref);
    }
    zeta.push_back(std::move(coefficients));
  }
  return from_coefficients(clusters, zeta, reference);
}

const RatioGroup* RatioConstraintSet::group_for(int cluster) const {
  for (const auto& g : groups_) {
    if (g.cluster == cluster) return &g;
  }
  return nullptr;
}

std::vector<std::vector<double>> RatioConstraintSet::coefficients() const {
  std::vector<std::vector<double>> out;
  for (const auto& g : groups_) out.push_back(g.zeta);
  return out;
}

Matrix cluster_overall_columns(const Matrix& w, const ClusterSpec& clusters, const RatioConstraintSet& ratios) {
  if (w.cols() != clusters.m()) {
    throw Error(Errc::DimensionMismatch, "cluster partition does not match the input matrix");
  }
  Matrix out(w.rows(), clusters.q());
  for (int h = 1; h <= clusters.q(); ++h) {
    if (clusters.cardinality(h) == 1) {
      out.col(h - 1) = w.col(clusters.group(h).front() - 1);
      continue;
    }
    const RatioGroup* group = ratios.group_for(h);
    if (group == nullptr) {
      throw Error(Errc::MissingCoefficients, "no ratio coefficients for cluster " + clusters.name(h));
    }
    Vector column = w.col(group->reference - 1);
    for (std::size_t j = 0; j < group->members.size(); ++j) {
      column += group->zeta[j] * w.col(group->members[j] - 1);
    }
    out.col(h - 1) = column;
  }
  return out;
}

std::optional<std::string> ratio_redundancy_warning(const ClusterSpec& clusters, int k) {
  if (clusters.q() < k) {
    return "ratio constraints leave " + std::to_string(clusters.q()) + " free magnitudes for " +
           std::to_string(k) + " effects";
  }
  return std::nullopt;
}

AllocationLaw AllocationLaw::nominal(const Matrix& g) {
  AllocationLaw law = reduced(g, {});
  law.kind_ = Kind::Nominal;
  return law;
}

AllocationLaw AllocationLaw::reduced(const Matrix& g, std::vector<int> faulty) {
  const int m = static_cast<int>(g.cols());
  const int k = static_cast<int>(g.rows());
  std::set<int> unique(faulty.begin(), faulty.end());
  for (int i : unique) {
    if (i < 1 || i > m) throw Error(Errc::IndexOutOfRange, "faulty actuator " + std::to_string(i));
  }
  if (static_cast<int>(unique.size()) > m - k) {
    throw Error(Errc::InsufficientRedundancy, std::to_string(unique.size()) + " faulty inputs exceed redundancy " +
                                                  std::to_string(m - k));
  }
  AllocationLaw law;
  law.kind_ = Kind::Reduced;
  law.g_ = g;
  law.zeroed_.assign(unique.begin(), unique.end());
  for (int i = 1; i <= m; ++i) {
    if (!unique.contains(i)) law.active_.push_back(i);
  }
  Matrix reduced(k, static_cast<Eigen::Index>(law.active_.size()));
  for (std::size_t c = 0; c < law.active_.size(); ++c) reduced.col(static_cast<Eigen::Index>(c)) = g.col(law.active_[c] - 1);
  try {
    law.solve_ = matrixlab::right_pseudo_inverse(reduced);
  } catch (const Error&) {
    if (unique.empty()) throw;
    throw Error(Errc::ReducedRankDeficient, "removing the faulty columns loses rank");
  }
  return law;
}

AllocationLaw AllocationLaw::with_ratios(const Matrix& g, const ClusterSpec& clusters,
                                         const RatioConstraintSet& ratios) {
  AllocationLaw law;
  law.kind_ = Kind::Ratio;
  law.g_ = g;
  law.clusters_ = clusters;
  law.ratios_ = ratios;
  const Matrix reduced = cluster_overall_columns(g, clusters, ratios);
  if (matrixlab::numerical_rank(matrixlab::normalize_columns(reduced)).rank < g.rows()) {
    throw Error(Errc::ReducedRankDeficient, "ratio-constrained allocation matrix loses rank");
  }
  law.solve_ = matrixlab::right_pseudo_inverse(reduced);
  return law;
}

AllocationResult AllocationLaw::apply(const Vector& tau) const {
  if (tau.size() != g_.rows()) {
    throw Error(Errc::DimensionMismatch, "commanded effect has wrong size");
  }
  AllocationResult result;
  result.u = Vector::Zero(g_.cols());
  if (kind_ == Kind::Ratio) {
    const Vector magnitude = solve_ * tau;
    for (int h = 1; h <= clusters_.q(); ++h) {
      const RatioGroup* group = ratios_.group_for(h);
      if (group == nullptr) {
        result.u(clusters_.group(h).front() - 1) = magnitude(h - 1);
        continue;
      }
      result.u(group->reference - 1) = magnitude(h - 1);
      for (std::size_t j = 0; j < group->members.size(); ++j) {
        result.u(group->members[j] - 1) = group->zeta[j] * magnitude(h - 1);
      }
    }
  } else {
    const Vector active = solve_ * tau;
    for (std::size_t c = 0; c < active_.size(); ++c) result.u(active_[c] - 1) = active(static_cast<Eigen::Index>(c));
  }
  result.effect = g_ * result.u;
  result.exact = is_exact(g_, result.u, tau);
  result.zeroed = zeroed_;
  return result;
}

std::string_view to_string(AllocationLaw::Kind kind) {
  switch (kind) {
    case AllocationLaw::Kind::Nominal: return "nominal";
    case AllocationLaw::Kind::Reduced: return "reduced";
    case AllocationLaw::Kind::Ratio: return "ratio";
  }
  return "nominal";
}

AllocationResult allocate_nominal(const Matrix& g, const Vector& tau) { return AllocationLaw::nominal(g).apply(tau); }

AllocationResult reallocate_reduced(const Matrix& g, const std::vector<int>& faulty, const Vector& tau) {
  return AllocationLaw::reduced(g, faulty).apply(tau);
}

AllocationResult allocate_with_ratios(const Matrix& g, const ClusterSpec& clusters, const RatioConstraintSet& ratios,
                                      const Vector& tau) {
  return AllocationLaw::with_ratios(g, clusters, ratios).apply(tau);
}

}  // namespace cofd
