#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/cover.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

inline constexpr std::size_t kDefaultBasisSize = 10;
inline constexpr double kMinRadius = 0.15;
inline constexpr double kMaxRadius = 1.0;

// Event-level edit distance normalized by the longer length. Substituting one
// event for another costs the mean per-slot disagreement (1 for two different
// concrete values, 0.5 for concrete against null). Inserting or deleting an
// event costs 1.
double tactic_distance(const Tactic& a, const Tactic& b);

struct BasisSet {
  std::vector<Tactic> tactics;
  std::vector<std::string> names;

  bool operator==(const BasisSet&) const = default;
};

// Up to `size` distinct archetypes from `tactics`: the shortest, the longest,
// the most specified tactic per feature, then the most specified remaining
// ones. Padded with single-event tactics when fewer than two are distinct.
BasisSet default_basis(std::span<const Tactic> tactics, const FeatureSchema& schema,
                       std::size_t size = kDefaultBasisSize);

// Unit-norm vector of 1 - distance to each basis tactic; the uniform unit
// vector when every similarity is 0.
std::vector<double> similarity_vector(const Tactic& t, const BasisSet& basis);

class ProjectionModel {
 public:
  const BasisSet& basis() const { return basis_; }
  const std::vector<double>& axis() const { return axis_; }
  const std::vector<double>& center() const { return center_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  std::size_t k() const { return k_; }

  // Signed coordinate along the principal axis.
  double coordinate(const Tactic& t) const;
  // Affine map of coordinate() into [kMinRadius, kMaxRadius], clamped.
  double radius(const Tactic& t) const;
  double angle(const Tactic& t) const;

  nlohmann::json to_json(const FeatureSchema& schema) const;
  static ProjectionModel from_json(const nlohmann::json& j, const FeatureSchema& schema);

  bool operator==(const ProjectionModel&) const = default;

 private:
  friend ProjectionModel fit_projection(std::span<const Tactic>, std::span<const std::size_t>, BasisSet);
  BasisSet basis_;
  std::vector<double> axis_;
  std::vector<double> center_;
  double lower_ = 0;
  double upper_ = 0;
  std::size_t k_ = 0;
};

// First principal axis of the similarity vectors of `initial`, sign fixed so
// the most frequent tactic (freq parallel to initial; first tactic when
// empty) lands on the nonnegative side. Fewer than two distinct vectors fall
// back to the first coordinate direction.
ProjectionModel fit_projection(std::span<const Tactic> initial, std::span<const std::size_t> freq, BasisSet basis);

// Feature with the most concrete slots, then the runner-up (ties to the lower id).
std::pair<std::size_t, std::size_t> top_two_features(const Tactic& t);

struct ProjectedPoint {
  int tactic_id = 0;
  double angle = 0;
  double radius = 0;
  std::size_t freq = 0;
  double importance = 0;
  std::optional<double> win_rate;

  bool operator==(const ProjectedPoint&) const = default;
};

ProjectedPoint project(const ProjectionModel& model, const Tactic& t, const TacticStats& stats);

}  // namespace tacmine
