#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tacmine {

// Categorical value index inside one feature. kNull only ever appears in
// patterns; raw hits are always concrete.
using ValueId = std::int16_t;
inline constexpr ValueId kNull = -1;

using PlayerId = int;

struct Feature {
  std::string name;
  std::vector<std::string> values;

  bool operator==(const Feature&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws Error{kValidation} when the feature list violates the schema rules.
  explicit FeatureSchema(std::vector<Feature> features);

  std::size_t size() const { return features_.size(); }
  const Feature& feature(std::size_t f) const { return features_.at(f); }
  const std::vector<Feature>& features() const { return features_; }
  std::size_t value_count(std::size_t f) const { return features_.at(f).values.size(); }

  std::optional<std::size_t> feature_id(std::string_view name) const;
  std::optional<ValueId> value_id(std::size_t f, std::string_view name) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<Feature> features_;
};

// One rally: l hits of k concrete values stored hit-major.
struct Rally {
  int id = 0;
  std::size_t k = 0;
  std::vector<ValueId> values;
  PlayerId server = 0;
  PlayerId winner = 0;

  std::size_t length() const { return k == 0 ? 0 : values.size() / k; }
  // 0-based hit index.
  std::span<const ValueId> hit(std::size_t i) const { return {values.data() + i * k, k}; }
  ValueId at(std::size_t i, std::size_t f) const { return values[i * k + f]; }

  bool operator==(const Rally&) const = default;
};

struct Dataset {
  FeatureSchema schema;
  std::vector<Rally> rallies;
  PlayerId focal_player = 0;

  std::size_t k() const { return schema.size(); }
  std::size_t total_slots() const;
  // Position of the rally with the given id, if present.
  std::optional<std::size_t> rally_index(int rally_id) const;

  bool operator==(const Dataset&) const = default;
};

// A consecutive, value-nullable multivariate pattern. Slots are stored
// event-major, k per event.
struct Tactic {
  int id = 0;
  std::size_t k = 0;
  std::vector<ValueId> slots;
  bool pinned = false;

  Tactic() = default;
  Tactic(int id, std::size_t k, std::vector<ValueId> slots, bool pinned = false)
      : id(id), k(k), slots(std::move(slots)), pinned(pinned) {}
  static Tactic from_events(int id, const std::vector<std::vector<ValueId>>& events);

  std::size_t length() const { return k == 0 ? 0 : slots.size() / k; }
  ValueId at(std::size_t e, std::size_t f) const { return slots[e * k + f]; }
  ValueId& at(std::size_t e, std::size_t f) { return slots[e * k + f]; }
  std::span<const ValueId> event(std::size_t e) const { return {slots.data() + e * k, k}; }

  std::size_t non_null_count() const;
  std::size_t non_null_count(std::size_t feature) const;
  std::size_t event_non_null_count(std::size_t e) const;

  // At least one concrete slot, and both boundary events carry a concrete slot.
  bool well_formed() const;
  // Drops all-null events at either end. An all-null tactic becomes empty.
  void strip_null_boundaries();

  // Identity used by set operations: slot-wise equality, ignoring id/pinned.
  bool same_pattern(const Tactic& other) const { return k == other.k && slots == other.slots; }

  bool operator==(const Tactic&) const = default;
};

struct PatternHash {
  std::size_t operator()(const Tactic& t) const;
};
struct PatternEqual {
  bool operator()(const Tactic& a, const Tactic& b) const { return a.same_pattern(b); }
};

// 1-based start index, matching how hits are numbered everywhere else.
struct Usage {
  int rally_id = 0;
  int start = 1;

  auto operator<=>(const Usage&) const = default;
};

struct TacticSet {
  std::vector<Tactic> tactics;
  // Parallel to tactics; filled from a cover.
  std::vector<std::vector<Usage>> usages;

  const Tactic* find(int id) const;
  std::vector<int> ids() const;

  bool operator==(const TacticSet&) const = default;
};

// True iff t fits inside r starting at the 1-based hit `start` and every
// concrete slot of t equals the aligned rally value.
bool match_at(const Tactic& t, const Rally& r, int start);

// Every (rally, start) where match_at holds, in (rally order, start) order.
// Occurrences may overlap.
std::vector<Usage> enumerate_matches(const Tactic& t, const Dataset& d);

// Number of positions where t matches; cheaper than enumerate_matches.
std::size_t count_matches(const Tactic& t, const Dataset& d);

// Throws Error{kValidation} naming the first problem found.
void validate_tactic(const Tactic& t, const FeatureSchema& schema);

}  // namespace tacmine
