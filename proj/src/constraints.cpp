#include "tacmine/constraints.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "tacmine/error.hpp"

namespace tacmine {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kConstraintVariantCount> kVariantNames = {
    "IndexRange",   "LengthRange", "FeatureImportance", "SplitByFeature", "SpecifyFeature",
    "MergeTactics", "ExpandTactic", "TrimTactic",       "DeleteTactic"};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::kValidation, msg); }

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < ids.size(); ++i) ss << (i ? ", " : "") << ids[i];
  return ss.str();
}

std::size_t feature_from_json(const json& j, const FeatureSchema& schema) {
  if (j.is_number_integer() && j.get<long long>() >= 0 && static_cast<std::size_t>(j.get<long long>()) < schema.size())
    return static_cast<std::size_t>(j.get<long long>());
  if (j.is_string())
    if (auto f = schema.feature_id(j.get<std::string>())) return *f;
  invalid("constraint: unknown feature " + j.dump());
}

std::vector<int> ids_from_json(const json& j, const char* field) {
  if (!j.contains(field)) invalid(std::string("constraint: missing field '") + field + "'");
  const auto& v = j[field];
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) invalid(std::string("constraint: field '") + field + "' must list tactic ids");
  std::vector<int> out;
  for (const auto& id : v) {
    if (!id.is_number_integer()) invalid(std::string("constraint: field '") + field + "' must list tactic ids");
    out.push_back(id.get<int>());
  }
  return out;
}

Direction direction_from_json(const json& j) {
  if (!j.contains("direction")) return Direction::kBack;
  if (!j["direction"].is_string()) invalid("constraint: direction must be 'front' or 'back'");
  auto d = direction_from_string(j["direction"].get<std::string>());
  if (!d) invalid("constraint: direction must be 'front' or 'back'");
  return *d;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::kFront ? "front" : "back"; }

std::optional<Direction> direction_from_string(std::string_view s) {
  if (s == "front") return Direction::kFront;
  if (s == "back") return Direction::kBack;
  return std::nullopt;
}

std::string_view to_string(ModAction a) {
  switch (a) {
    case ModAction::kAdd: return "add";
    case ModAction::kRemove: return "remove";
    case ModAction::kReplace: return "replace";
  }
  return "?";
}

bool is_global(const Constraint& c) { return c.index() < 3; }

std::string_view variant_name(const Constraint& c) { return kVariantNames[c.index()]; }
std::string_view variant_name(std::size_t index) { return kVariantNames.at(index); }

std::optional<std::size_t> variant_index(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i)
    if (kVariantNames[i] == name) return i;
  return std::nullopt;
}

std::vector<int> referenced_tactics(const Constraint& c) {
  return std::visit(overloaded{[](const constraint::IndexRange&) { return std::vector<int>{}; },
                               [](const constraint::LengthRange&) { return std::vector<int>{}; },
                               [](const constraint::FeatureImportance&) { return std::vector<int>{}; },
                               [](const constraint::ExpandTactic& x) { return std::vector<int>{x.tactic}; },
                               [](const constraint::TrimTactic& x) { return std::vector<int>{x.tactic}; },
                               [](const auto& x) { return x.tactics; }},
                    c);
}

std::string describe(const Constraint& c, const FeatureSchema& schema) {
  auto fname = [&](std::size_t f) { return f < schema.size() ? schema.feature(f).name : "#" + std::to_string(f); };
  std::ostringstream ss;
  std::visit(overloaded{
                 [&](const constraint::IndexRange& x) { ss << "tactics start within hits " << x.lo << "-" << x.hi; },
                 [&](const constraint::LengthRange& x) {
                   ss << "tactic length in [" << x.min << ", ";
                   if (x.max)
                     ss << *x.max << "]";
                   else
                     ss << "inf)";
                 },
                 [&](const constraint::FeatureImportance& x) {
                   ss << "importance of " << fname(x.feature) << " = " << x.value;
                 },
                 [&](const constraint::SplitByFeature& x) {
                   ss << "split tactics " << join_ids(x.tactics) << " by " << fname(x.feature);
                 },
                 [&](const constraint::SpecifyFeature& x) {
                   ss << "specify ";
                   for (std::size_t i = 0; i < x.features.size(); ++i) ss << (i ? ", " : "") << fname(x.features[i]);
                   ss << " for tactics " << join_ids(x.tactics);
                 },
                 [&](const constraint::MergeTactics& x) { ss << "merge tactics " << join_ids(x.tactics); },
                 [&](const constraint::ExpandTactic& x) {
                   ss << "expand tactic " << x.tactic << " by " << x.hits << " hit(s) at the " << to_string(x.direction);
                 },
                 [&](const constraint::TrimTactic& x) {
                   ss << "trim " << x.hits << " hit(s) from the " << to_string(x.direction) << " of tactic " << x.tactic;
                 },
                 [&](const constraint::DeleteTactic& x) { ss << "delete tactics " << join_ids(x.tactics); },
             },
             c);
  return ss.str();
}

void validate_constraint(const Constraint& c, const FeatureSchema& schema, std::span<const Tactic> current) {
  auto check_feature = [&](std::size_t f) {
    if (f >= schema.size()) invalid("constraint: feature index " + std::to_string(f) + " out of range");
  };
  auto check_ids = [&](const std::vector<int>& ids, std::size_t min_count) {
    if (ids.size() < min_count)
      invalid(std::string(variant_name(c)) + ": needs at least " + std::to_string(min_count) + " tactic id(s)");
    std::set<int> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) invalid(std::string(variant_name(c)) + ": repeated tactic id");
    for (int id : ids) {
      const bool found = std::any_of(current.begin(), current.end(), [&](const Tactic& t) { return t.id == id; });
      if (!found) throw Error(ErrorCode::kNotFound, "unknown tactic " + std::to_string(id), json{{"tactic", id}});
    }
  };
  std::visit(overloaded{
                 [&](const constraint::IndexRange& x) {
                   if (x.lo < 1 || x.lo > x.hi) invalid("IndexRange: need 1 <= lo <= hi");
                 },
                 [&](const constraint::LengthRange& x) {
                   if (x.min < 1 || (x.max && *x.max < x.min)) invalid("LengthRange: need 1 <= min <= max");
                 },
                 [&](const constraint::FeatureImportance& x) {
                   check_feature(x.feature);
                   if (!(x.value >= -1.0 && x.value <= 1.0)) invalid("FeatureImportance: value must lie in [-1, 1]");
                 },
                 [&](const constraint::SplitByFeature& x) {
                   check_feature(x.feature);
                   check_ids(x.tactics, 1);
                 },
                 [&](const constraint::SpecifyFeature& x) {
                   if (x.features.empty()) invalid("SpecifyFeature: needs at least one feature");
                   for (auto f : x.features) check_feature(f);
                   check_ids(x.tactics, 1);
                 },
                 [&](const constraint::MergeTactics& x) { check_ids(x.tactics, 2); },
                 [&](const constraint::ExpandTactic& x) {
                   if (x.hits < 1) invalid("ExpandTactic: hits must be >= 1");
                   check_ids({x.tactic}, 1);
                 },
                 [&](const constraint::TrimTactic& x) {
                   if (x.hits < 1) invalid("TrimTactic: hits must be >= 1");
                   check_ids({x.tactic}, 1);
                 },
                 [&](const constraint::DeleteTactic& x) { check_ids(x.tactics, 1); },
             },
             c);
}

json constraint_to_json(const Constraint& c, const FeatureSchema& schema) {
  auto fname = [&](std::size_t f) { return schema.feature(f).name; };
  json j = {{"type", variant_name(c)}};
  std::visit(overloaded{
                 [&](const constraint::IndexRange& x) {
                   j["lo"] = x.lo;
                   j["hi"] = x.hi;
                 },
                 [&](const constraint::LengthRange& x) {
                   j["min"] = x.min;
                   j["max"] = x.max ? json(*x.max) : json(nullptr);
                 },
                 [&](const constraint::FeatureImportance& x) {
                   j["feature"] = fname(x.feature);
                   j["value"] = x.value;
                 },
                 [&](const constraint::SplitByFeature& x) {
                   j["tactics"] = x.tactics;
                   j["feature"] = fname(x.feature);
                 },
                 [&](const constraint::SpecifyFeature& x) {
                   j["tactics"] = x.tactics;
                   json fs = json::array();
                   for (auto f : x.features) fs.push_back(fname(f));
                   j["features"] = fs;
                 },
                 [&](const constraint::MergeTactics& x) { j["tactics"] = x.tactics; },
                 [&](const constraint::ExpandTactic& x) {
                   j["tactic"] = x.tactic;
                   j["direction"] = to_string(x.direction);
                   j["hits"] = x.hits;
                 },
                 [&](const constraint::TrimTactic& x) {
                   j["tactic"] = x.tactic;
                   j["direction"] = to_string(x.direction);
                   j["hits"] = x.hits;
                 },
                 [&](const constraint::DeleteTactic& x) { j["tactics"] = x.tactics; },
             },
             c);
  return j;
}

Constraint constraint_from_json(const json& j, const FeatureSchema& schema) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) invalid("constraint: missing 'type'");
  const auto type = j["type"].get<std::string>();
  const auto index = variant_index(type);
  if (!index) invalid("constraint: unknown type '" + type + "'");
  auto int_field = [&](const char* name, std::optional<int> fallback = std::nullopt) {
    if (!j.contains(name) || j[name].is_null()) {
      if (fallback) return *fallback;
      invalid("constraint: missing field '" + std::string(name) + "'");
    }
    if (!j[name].is_number_integer()) invalid("constraint: field '" + std::string(name) + "' must be an integer");
    return j[name].get<int>();
  };
  auto single_id = [&]() {
    const auto ids = ids_from_json(j, "tactic");
    if (ids.size() != 1) invalid(type + ": expects exactly one tactic id");
    return ids.front();
  };
  switch (*index) {
    case 0: return constraint::IndexRange{int_field("lo"), int_field("hi")};
    case 1: {
      constraint::LengthRange r;
      const int min = int_field("min", 1);
      if (min < 1) invalid("LengthRange: min must be >= 1");
      r.min = static_cast<std::size_t>(min);
      if (j.contains("max") && !j["max"].is_null()) {
        const int max = int_field("max");
        if (max < 1) invalid("LengthRange: max must be >= 1");
        r.max = static_cast<std::size_t>(max);
      }
      return r;
    }
    case 2: {
      if (!j.contains("feature")) invalid("FeatureImportance: missing field 'feature'");
      if (!j.contains("value") || !j["value"].is_number()) invalid("FeatureImportance: missing numeric 'value'");
      return constraint::FeatureImportance{feature_from_json(j["feature"], schema), j["value"].get<double>()};
    }
    case 3: {
      if (!j.contains("feature")) invalid("SplitByFeature: missing field 'feature'");
      return constraint::SplitByFeature{ids_from_json(j, "tactics"), feature_from_json(j["feature"], schema)};
    }
    case 4: {
      constraint::SpecifyFeature s{ids_from_json(j, "tactics"), {}};
      if (!j.contains("features")) invalid("SpecifyFeature: missing field 'features'");
      if (j["features"].is_array())
        for (const auto& f : j["features"]) s.features.push_back(feature_from_json(f, schema));
      else
        s.features.push_back(feature_from_json(j["features"], schema));
      return s;
    }
    case 5: return constraint::MergeTactics{ids_from_json(j, "tactics")};
    case 6: return constraint::ExpandTactic{single_id(), direction_from_json(j), int_field("hits", 1)};
    case 7: return constraint::TrimTactic{single_id(), direction_from_json(j), int_field("hits", 1)};
    default: return constraint::DeleteTactic{ids_from_json(j, "tactics")};
  }
}

MetricParams compile_global(std::span<const Constraint> cs, MetricParams base) {
  const constraint::IndexRange* index_seen = nullptr;
  const constraint::LengthRange* length_seen = nullptr;
  for (const auto& c : cs) {
    if (!is_global(c)) invalid(std::string("compile_global: ") + std::string(variant_name(c)) + " is not global");
    if (const auto* x = std::get_if<constraint::IndexRange>(&c)) {
      if (x->lo < 1 || x->lo > x->hi) invalid("IndexRange: need 1 <= lo <= hi");
      if (index_seen && !(*index_seen == *x))
        invalid("conflicting index ranges in one batch: " + std::to_string(index_seen->lo) + "-" +
                std::to_string(index_seen->hi) + " vs " + std::to_string(x->lo) + "-" + std::to_string(x->hi));
      index_seen = x;
      base.index_range = tacmine::IndexRange{x->lo, x->hi};
    } else if (const auto* x = std::get_if<constraint::LengthRange>(&c)) {
      if (x->min < 1 || (x->max && *x->max < x->min)) invalid("LengthRange: need 1 <= min <= max");
      if (length_seen && !(*length_seen == *x)) {
        auto fmt = [](const constraint::LengthRange& r) {
          return std::to_string(r.min) + "-" + (r.max ? std::to_string(*r.max) : std::string("inf"));
        };
        invalid("conflicting length ranges in one batch: " + fmt(*length_seen) + " vs " + fmt(*x));
      }
      length_seen = x;
      base.length_range = tacmine::LengthRange{x->min, x->max};
    } else if (const auto* x = std::get_if<constraint::FeatureImportance>(&c)) {
      base.importance[x->feature] = std::clamp(x->value, -1.0, 1.0);
    }
  }
  base.validate();
  return base;
}

TacticSet remine(const Dataset& d, const MetricParams& p, const MinerConfig& cfg, std::span<const Tactic> pinned,
                 int first_id) {
  std::vector<Tactic> initial(pinned.begin(), pinned.end());
  for (auto& t : initial) t.pinned = true;
  return mine_initial(d, p, cfg, initial, first_id);
}

}  // namespace tacmine
