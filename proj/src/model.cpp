#include "tacmine/model.hpp"

#include <algorithm>
#include <set>

#include "tacmine/error.hpp"

namespace tacmine {

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
  if (features_.empty()) throw Error(ErrorCode::kValidation, "schema: at least one feature is required");
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw Error(ErrorCode::kValidation, "schema: feature with empty name");
    if (!names.insert(f.name).second)
      throw Error(ErrorCode::kValidation, "schema: duplicate feature name '" + f.name + "'");
    if (f.values.size() < 2)
      throw Error(ErrorCode::kValidation, "schema: feature '" + f.name + "' needs at least two values");
    if (f.values.size() > 32767)
      throw Error(ErrorCode::kValidation, "schema: feature '" + f.name + "' has too many values");
    std::set<std::string> values(f.values.begin(), f.values.end());
    if (values.size() != f.values.size())
      throw Error(ErrorCode::kValidation, "schema: duplicate value name in feature '" + f.name + "'");
  }
}

std::optional<std::size_t> FeatureSchema::feature_id(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::optional<ValueId> FeatureSchema::value_id(std::size_t f, std::string_view name) const {
  const auto& values = features_.at(f).values;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == name) return static_cast<ValueId>(i);
  return std::nullopt;
}

std::size_t Dataset::total_slots() const {
  std::size_t total = 0;
  for (const auto& r : rallies) total += r.values.size();
  return total;
}

std::optional<std::size_t> Dataset::rally_index(int rally_id) const {
  for (std::size_t i = 0; i < rallies.size(); ++i)
    if (rallies[i].id == rally_id) return i;
  return std::nullopt;
}

Tactic Tactic::from_events(int id, const std::vector<std::vector<ValueId>>& events) {
  Tactic t;
  t.id = id;
  t.k = events.empty() ? 0 : events.front().size();
  for (const auto& e : events) {
    if (e.size() != t.k) throw Error(ErrorCode::kValidation, "tactic: ragged events");
    t.slots.insert(t.slots.end(), e.begin(), e.end());
  }
  return t;
}

std::size_t Tactic::non_null_count() const {
  return static_cast<std::size_t>(std::count_if(slots.begin(), slots.end(), [](ValueId v) { return v != kNull; }));
}

std::size_t Tactic::non_null_count(std::size_t feature) const {
  std::size_t n = 0;
  for (std::size_t e = 0; e < length(); ++e) n += at(e, feature) != kNull;
  return n;
}

std::size_t Tactic::event_non_null_count(std::size_t e) const {
  std::size_t n = 0;
  for (ValueId v : event(e)) n += v != kNull;
  return n;
}

bool Tactic::well_formed() const {
  if (k == 0 || slots.empty() || slots.size() % k != 0) return false;
  return event_non_null_count(0) > 0 && event_non_null_count(length() - 1) > 0;
}

void Tactic::strip_null_boundaries() {
  if (k == 0) return;
  std::size_t first = 0, last = length();
  while (first < last && event_non_null_count(first) == 0) ++first;
  while (last > first && event_non_null_count(last - 1) == 0) --last;
  slots = std::vector<ValueId>(slots.begin() + static_cast<std::ptrdiff_t>(first * k),
                               slots.begin() + static_cast<std::ptrdiff_t>(last * k));
}

std::size_t PatternHash::operator()(const Tactic& t) const {
  std::size_t h = 1469598103934665603ull ^ t.k;
  for (ValueId v : t.slots) {
    h ^= static_cast<std::size_t>(static_cast<std::uint16_t>(v));
    h *= 1099511628211ull;
  }
  return h;
}

const Tactic* TacticSet::find(int id) const {
  for (const auto& t : tactics)
    if (t.id == id) return &t;
  return nullptr;
}

std::vector<int> TacticSet::ids() const {
  std::vector<int> out;
  out.reserve(tactics.size());
  for (const auto& t : tactics) out.push_back(t.id);
  return out;
}

bool match_at(const Tactic& t, const Rally& r, int start) {
  if (start < 1 || t.k != r.k) return false;
  const std::size_t len = t.length();
  const auto first = static_cast<std::size_t>(start - 1);
  if (first + len > r.length()) return false;
  const ValueId* pattern = t.slots.data();
  const ValueId* data = r.values.data() + first * r.k;
  for (std::size_t i = 0; i < t.slots.size(); ++i)
    if (pattern[i] != kNull && pattern[i] != data[i]) return false;
  return true;
}

std::vector<Usage> enumerate_matches(const Tactic& t, const Dataset& d) {
  std::vector<Usage> out;
  for (const auto& r : d.rallies) {
    const int last_start = static_cast<int>(r.length()) - static_cast<int>(t.length()) + 1;
    for (int s = 1; s <= last_start; ++s)
      if (match_at(t, r, s)) out.push_back({r.id, s});
  }
  if (!std::is_sorted(out.begin(), out.end())) std::sort(out.begin(), out.end());
  return out;
}

std::size_t count_matches(const Tactic& t, const Dataset& d) {
  std::size_t n = 0;
  for (const auto& r : d.rallies) {
    const int last_start = static_cast<int>(r.length()) - static_cast<int>(t.length()) + 1;
    for (int s = 1; s <= last_start; ++s) n += match_at(t, r, s);
  }
  return n;
}

void validate_tactic(const Tactic& t, const FeatureSchema& schema) {
  const std::string where = "tactic " + std::to_string(t.id);
  if (t.k != schema.size()) throw Error(ErrorCode::kValidation, where + ": event width does not match schema");
  if (t.slots.empty()) throw Error(ErrorCode::kValidation, where + ": no events");
  for (std::size_t e = 0; e < t.length(); ++e)
    for (std::size_t f = 0; f < t.k; ++f) {
      const ValueId v = t.at(e, f);
      if (v != kNull && (v < 0 || static_cast<std::size_t>(v) >= schema.value_count(f)))
        throw Error(ErrorCode::kValidation, where + ": value out of range for feature '" + schema.feature(f).name + "'");
    }
  if (!t.well_formed())
    throw Error(ErrorCode::kValidation, where + ": boundary events must contain a concrete value");
}

}  // namespace tacmine
