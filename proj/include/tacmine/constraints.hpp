#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/cover.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

enum class Direction { kFront, kBack };

std::string_view to_string(Direction d);
std::optional<Direction> direction_from_string(std::string_view s);

// The nine suggestion types. The first three reshape the metric (global);
// the other six fine-tune named tactics (local).
namespace constraint {

struct IndexRange {
  int lo = 1;
  int hi = 1;
  bool operator==(const IndexRange&) const = default;
};
struct LengthRange {
  std::size_t min = 1;
  std::optional<std::size_t> max;
  bool operator==(const LengthRange&) const = default;
};
struct FeatureImportance {
  std::size_t feature = 0;
  double value = 0;
  bool operator==(const FeatureImportance&) const = default;
};
struct SplitByFeature {
  std::vector<int> tactics;
  std::size_t feature = 0;
  bool operator==(const SplitByFeature&) const = default;
};
struct SpecifyFeature {
  std::vector<int> tactics;
  std::vector<std::size_t> features;
  bool operator==(const SpecifyFeature&) const = default;
};
struct MergeTactics {
  std::vector<int> tactics;
  bool operator==(const MergeTactics&) const = default;
};
struct ExpandTactic {
  int tactic = 0;
  Direction direction = Direction::kBack;
  int hits = 1;
  bool operator==(const ExpandTactic&) const = default;
};
struct TrimTactic {
  int tactic = 0;
  Direction direction = Direction::kBack;
  int hits = 1;
  bool operator==(const TrimTactic&) const = default;
};
struct DeleteTactic {
  std::vector<int> tactics;
  bool operator==(const DeleteTactic&) const = default;
};

}  // namespace constraint

using Constraint =
    std::variant<constraint::IndexRange, constraint::LengthRange, constraint::FeatureImportance,
                 constraint::SplitByFeature, constraint::SpecifyFeature, constraint::MergeTactics,
                 constraint::ExpandTactic, constraint::TrimTactic, constraint::DeleteTactic>;

inline constexpr std::size_t kConstraintVariantCount = std::variant_size_v<Constraint>;

bool is_global(const Constraint& c);
std::string_view variant_name(const Constraint& c);
std::string_view variant_name(std::size_t index);
std::optional<std::size_t> variant_index(std::string_view name);
std::vector<int> referenced_tactics(const Constraint& c);
// Short human-readable rendering, e.g. "merge tactics 4, 5".
std::string describe(const Constraint& c, const FeatureSchema& schema);

// Checks parameter ranges and, for local variants, that the referenced ids
// exist in `current`. Throws Error{kValidation} / Error{kNotFound}.
void validate_constraint(const Constraint& c, const FeatureSchema& schema, std::span<const Tactic> current);

// Tagged record: {"type": "<VariantName>", ...fields}. Features are named.
nlohmann::json constraint_to_json(const Constraint& c, const FeatureSchema& schema);
Constraint constraint_from_json(const nlohmann::json& j, const FeatureSchema& schema);

// Folds global constraints into metric parameters; later constraints on the
// same knob override earlier ones. Two range constraints for the same knob
// inside one batch that disagree are rejected.
MetricParams compile_global(std::span<const Constraint> cs, MetricParams base = {});

// Re-mines under the compiled metric, keeping pinned tactics.
TacticSet remine(const Dataset& d, const MetricParams& p, const MinerConfig& cfg, std::span<const Tactic> pinned,
                 int first_id);

enum class ModAction { kAdd, kRemove, kReplace };
std::string_view to_string(ModAction a);

struct Modification {
  ModAction action = ModAction::kAdd;
  // Event offset relative to the adjusted tactic's first event; negative
  // offsets address events prepended in front of it.
  int event = 0;
  std::size_t feature = 0;
  ValueId value = kNull;
  bool operator==(const Modification&) const = default;
};

// Applies the modification sequence to t (extending it with null events
// where offsets fall outside) and strips all-null boundary events.
Tactic apply_modifications(const Tactic& t, std::span<const Modification> mods);

struct FineTuneCandidates {
  // Tactics the constraint adjusts (removed before candidates are admitted).
  std::vector<int> adjusted;
  std::vector<Tactic> candidates;
  // Parallel to candidates: the modification sequence that produced each.
  std::vector<std::vector<Modification>> modifications;
  // Number of modifications per candidate (the BFS depth); 0 when none.
  int depth = 0;
  // Set when no candidate could be generated.
  std::string reason;
  // DeleteTactic: nothing to admit and no admission guarantee.
  bool skip_guarantee = false;
};

// Breadth-first search over modification sequences of each adjusted tactic.
// Returns every candidate at the minimum depth that satisfies the constraint
// and occurs in d. Values for add/replace come from what is observed at the
// aligned positions of the tactic's occurrences. Candidates are numbered from
// first_id in a deterministic order.
FineTuneCandidates generate_fine_tuning(const Constraint& c, std::span<const Tactic> current, const Dataset& d,
                                        int first_id = 0);

// Whether `candidate` fulfils the local constraint `c` relative to the
// adjusted tactics (in the order the constraint names them).
bool satisfies_local(const Constraint& c, std::span<const Tactic> adjusted, const Tactic& candidate);

// Slot-wise common-value generalization of the members (best-overlap
// alignment for unequal lengths). Empty when nothing is shared.
std::optional<Tactic> super_tactic(std::span<const Tactic> members);
// Alignment offset of b relative to a used by super_tactic.
int merge_offset(const Tactic& a, const Tactic& b);

// Fine-tuning optimizer: T_new = T - adjT, then candidates are visited by
// descending frequency (ties: fewer null slots, lower id) and admitted when
// they shrink L* or when none has been admitted yet; after each admission
// earlier admitted candidates that no longer pay off are dropped. Tactics
// outside adjT are never touched.
std::vector<Tactic> fine_tune_optimize(const Dataset& d, std::span<const Tactic> current, std::span<const int> adjusted,
                                       std::span<const Tactic> candidates, const MetricParams& p,
                                       bool guarantee = true);

// The visiting order used by fine_tune_optimize.
std::vector<std::size_t> candidate_order(const Dataset& d, std::span<const Tactic> candidates);

}  // namespace tacmine
