#include <algorithm>
#include <cstdlib>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tacmine/constraints.hpp"
#include "tacmine/error.hpp"

namespace tacmine {
namespace {

constexpr std::size_t kMaxFrontier = 50000;
constexpr int kMaxDepth = 32;

const Tactic& find_tactic(std::span<const Tactic> current, int id) {
  for (const auto& t : current)
    if (t.id == id) return t;
  throw Error(ErrorCode::kNotFound, "unknown tactic " + std::to_string(id), nlohmann::json{{"tactic", id}});
}

// Pads t with all-null events so modifications can address new hits.
Tactic pad(const Tactic& t, std::size_t front, std::size_t back) {
  Tactic out(t.id, t.k, std::vector<ValueId>((front + t.length() + back) * t.k, kNull), t.pinned);
  std::copy(t.slots.begin(), t.slots.end(), out.slots.begin() + static_cast<std::ptrdiff_t>(front * t.k));
  return out;
}

Tactic stripped(Tactic t) {
  t.strip_null_boundaries();
  return t;
}

// One slot the search may change, in padded coordinates.
struct Slot {
  std::size_t event;
  std::size_t feature;
};

struct SearchProblem {
  Tactic start;              // padded
  std::size_t front_pad = 0;  // events prepended in front of the original tactic
  // Slots the search may fill (add). Filling only happens with observed values.
  std::function<bool(const Tactic& state, Slot s)> may_add;
  std::function<bool(const Tactic& state)> satisfied;
};

struct Found {
  Tactic state;
  std::vector<Modification> path;
};

// Breadth-first search over `add` modifications. Adding a value only narrows
// the set of occurrences, so a state without occurrences is a dead end.
std::vector<Found> bfs_fill(const SearchProblem& problem, const CoverState& index, int& depth, std::string& reason) {
  std::vector<Found> level{{problem.start, {}}};
  std::unordered_set<Tactic, PatternHash, PatternEqual> visited{problem.start};
  if (index.matches(problem.start).empty()) {
    reason = "the tactic has no occurrence with room for the requested change";
    return {};
  }
  const std::size_t k = problem.start.k;
  for (depth = 0; depth <= kMaxDepth; ++depth) {
    std::vector<Found> hits;
    for (const auto& node : level)
      if (problem.satisfied(node.state)) hits.push_back(node);
    if (!hits.empty()) return hits;

    std::vector<Found> next;
    for (const auto& node : level) {
      const auto occurrences = index.matches(node.state);
      for (std::size_t e = 0; e < node.state.length(); ++e)
        for (std::size_t f = 0; f < k; ++f) {
          if (node.state.at(e, f) != kNull || !problem.may_add(node.state, {e, f})) continue;
          std::set<ValueId> observed;
          for (const auto& [r, start] : occurrences)
            observed.insert(index.dataset().rallies[r].at(static_cast<std::size_t>(start - 1) + e, f));
          for (ValueId v : observed) {
            Found child{node.state, node.path};
            child.state.at(e, f) = v;
            if (!visited.insert(child.state).second) continue;
            child.path.push_back(
                {ModAction::kAdd, static_cast<int>(e) - static_cast<int>(problem.front_pad), f, v});
            next.push_back(std::move(child));
          }
        }
    }
    if (next.empty()) {
      reason = "no reachable tactic satisfies the constraint";
      return {};
    }
    if (next.size() > kMaxFrontier) {
      reason = "candidate search exceeded its frontier budget";
      return {};
    }
    level = std::move(next);
  }
  reason = "candidate search exceeded its depth budget";
  return {};
}

// Removal-only targets are forced: every concrete slot outside the target
// must be removed exactly once, so the minimum depth is the slot difference.
Found forced_removals(const Tactic& from, const Tactic& target_same_coords) {
  Found out{target_same_coords, {}};
  for (std::size_t e = 0; e < from.length(); ++e)
    for (std::size_t f = 0; f < from.k; ++f)
      if (from.at(e, f) != kNull && target_same_coords.at(e, f) == kNull)
        out.path.push_back({ModAction::kRemove, static_cast<int>(e), f, kNull});
  return out;
}

// Common values of the members, expressed in the first member's coordinates.
Tactic common_in_first_coords(std::span<const Tactic> members) {
  Tactic cur = members.front();
  for (std::size_t i = 1; i < members.size(); ++i) {
    const Tactic& b = members[i];
    const int o = merge_offset(cur, b);
    for (std::size_t e = 0; e < cur.length(); ++e)
      for (std::size_t f = 0; f < cur.k; ++f) {
        const int be = static_cast<int>(e) - o;
        const bool inside = be >= 0 && be < static_cast<int>(b.length());
        if (!inside || b.at(static_cast<std::size_t>(be), f) != cur.at(e, f)) cur.at(e, f) = kNull;
      }
  }
  return cur;
}

}  // namespace

int merge_offset(const Tactic& a, const Tactic& b) {
  const int la = static_cast<int>(a.length());
  const int lb = static_cast<int>(b.length());
  if (la == lb) return 0;
  int best = 0;
  long best_score = -1;
  for (int o = -lb + 1; o <= la - 1; ++o) {
    long score = 0;
    for (int e = std::max(0, o); e < std::min(la, o + lb); ++e)
      for (std::size_t f = 0; f < a.k; ++f) {
        const ValueId va = a.at(static_cast<std::size_t>(e), f);
        score += va != kNull && va == b.at(static_cast<std::size_t>(e - o), f);
      }
    const bool better = score > best_score ||
                        (score == best_score && (std::abs(o) < std::abs(best) || (std::abs(o) == std::abs(best) && o < best)));
    if (better) {
      best = o;
      best_score = score;
    }
  }
  return best;
}

std::optional<Tactic> super_tactic(std::span<const Tactic> members) {
  if (members.empty()) return std::nullopt;
  Tactic sup = stripped(common_in_first_coords(members));
  if (sup.slots.empty()) return std::nullopt;
  sup.id = 0;
  sup.pinned = false;
  return sup;
}

Tactic apply_modifications(const Tactic& t, std::span<const Modification> mods) {
  int lo = 0;
  int hi = static_cast<int>(t.length()) - 1;
  for (const auto& m : mods) {
    lo = std::min(lo, m.event);
    hi = std::max(hi, m.event);
  }
  Tactic out = pad(t, static_cast<std::size_t>(-lo), static_cast<std::size_t>(hi - (static_cast<int>(t.length()) - 1)));
  for (const auto& m : mods) {
    if (m.feature >= t.k) throw Error(ErrorCode::kInvalidArgument, "modification: feature out of range");
    ValueId& slot = out.at(static_cast<std::size_t>(m.event - lo), m.feature);
    switch (m.action) {
      case ModAction::kAdd:
        if (slot != kNull || m.value == kNull) throw Error(ErrorCode::kInvalidArgument, "modification: add needs a null slot");
        slot = m.value;
        break;
      case ModAction::kRemove:
        if (slot == kNull) throw Error(ErrorCode::kInvalidArgument, "modification: remove needs a concrete slot");
        slot = kNull;
        break;
      case ModAction::kReplace:
        if (slot == kNull || m.value == kNull || m.value == slot)
          throw Error(ErrorCode::kInvalidArgument, "modification: replace needs a different concrete value");
        slot = m.value;
        break;
    }
  }
  out.strip_null_boundaries();
  return out;
}

bool satisfies_local(const Constraint& c, std::span<const Tactic> adjusted, const Tactic& candidate) {
  if (adjusted.empty() || candidate.slots.empty() || !candidate.well_formed()) return false;
  const Tactic& t = adjusted.front();
  auto specializes = [&](const Tactic& general, const Tactic& special) {
    if (general.k != special.k || general.length() != special.length()) return false;
    for (std::size_t i = 0; i < general.slots.size(); ++i)
      if (general.slots[i] != kNull && general.slots[i] != special.slots[i]) return false;
    return true;
  };
  if (const auto* x = std::get_if<constraint::SplitByFeature>(&c)) {
    if (!specializes(t, candidate)) return false;
    for (std::size_t e = 0; e < t.length(); ++e)
      if (t.at(e, x->feature) == kNull && candidate.at(e, x->feature) != kNull) return true;
    return false;
  }
  if (const auto* x = std::get_if<constraint::SpecifyFeature>(&c)) {
    if (!specializes(t, candidate)) return false;
    for (std::size_t e = 0; e < candidate.length(); ++e)
      for (auto f : x->features)
        if (candidate.at(e, f) == kNull) return false;
    return true;
  }
  if (std::holds_alternative<constraint::MergeTactics>(c)) {
    const auto sup = super_tactic(adjusted);
    return sup && sup->same_pattern(candidate);
  }
  if (const auto* x = std::get_if<constraint::ExpandTactic>(&c)) {
    const std::size_t h = static_cast<std::size_t>(x->hits);
    if (candidate.length() != t.length() + h) return false;
    const std::size_t base = x->direction == Direction::kFront ? h : 0;
    for (std::size_t e = 0; e < t.length(); ++e)
      for (std::size_t f = 0; f < t.k; ++f)
        if (candidate.at(base + e, f) != t.at(e, f)) return false;
    const std::size_t fresh = x->direction == Direction::kFront ? 0 : t.length();
    for (std::size_t e = fresh; e < fresh + h; ++e)
      if (candidate.event_non_null_count(e) == 0) return false;
    return true;
  }
  if (const auto* x = std::get_if<constraint::TrimTactic>(&c)) {
    const std::size_t h = static_cast<std::size_t>(x->hits);
    if (h >= t.length()) return false;
    const std::size_t from = x->direction == Direction::kFront ? h : 0;
    Tactic expected(0, t.k,
                    std::vector<ValueId>(t.slots.begin() + static_cast<std::ptrdiff_t>(from * t.k),
                                         t.slots.begin() + static_cast<std::ptrdiff_t>((from + t.length() - h) * t.k)));
    expected.strip_null_boundaries();
    return expected.same_pattern(candidate);
  }
  return false;
}

FineTuneCandidates generate_fine_tuning(const Constraint& c, std::span<const Tactic> current, const Dataset& d,
                                        int first_id) {
  if (is_global(c)) throw Error(ErrorCode::kInvalidArgument, "generate_fine_tuning: constraint is global");
  validate_constraint(c, d.schema, current);

  FineTuneCandidates out;
  out.adjusted = referenced_tactics(c);
  if (std::holds_alternative<constraint::DeleteTactic>(c)) {
    out.skip_guarantee = true;
    return out;
  }

  const CoverState index(d, MetricParams{});
  std::vector<Found> found;
  std::vector<std::string> reasons;

  auto add_found = [&](std::vector<Found> more) {
    for (auto& f : more) {
      f.state = stripped(std::move(f.state));
      found.push_back(std::move(f));
    }
  };

  if (const auto* x = std::get_if<constraint::SplitByFeature>(&c)) {
    for (int id : x->tactics) {
      const Tactic& t = find_tactic(current, id);
      if (t.non_null_count(x->feature) == t.length()) {
        reasons.push_back("tactic " + std::to_string(id) + " has no null slot in feature '" +
                          d.schema.feature(x->feature).name + "'");
        continue;
      }
      SearchProblem p{t, 0,
                      [&](const Tactic&, Slot s) { return s.feature == x->feature && t.at(s.event, s.feature) == kNull; },
                      [&](const Tactic& st) {
                        for (std::size_t e = 0; e < t.length(); ++e)
                          if (t.at(e, x->feature) == kNull && st.at(e, x->feature) != kNull) return true;
                        return false;
                      }};
      std::string reason;
      auto hits = bfs_fill(p, index, out.depth, reason);
      // A child used once is noise; a split needs at least two real children.
      std::erase_if(hits, [&](const Found& f) { return index.matches(f.state).size() < 2; });
      if (hits.size() < 2) {
        reasons.push_back("splitting tactic " + std::to_string(id) + " by '" + d.schema.feature(x->feature).name +
                          "' yields fewer than two children used at least twice");
        continue;
      }
      add_found(std::move(hits));
    }
  } else if (const auto* x = std::get_if<constraint::SpecifyFeature>(&c)) {
    for (int id : x->tactics) {
      const Tactic& t = find_tactic(current, id);
      auto target = [&](std::size_t f) { return std::find(x->features.begin(), x->features.end(), f) != x->features.end(); };
      SearchProblem p{t, 0, [&](const Tactic&, Slot s) { return target(s.feature); },
                      [&](const Tactic& st) {
                        for (std::size_t e = 0; e < st.length(); ++e)
                          for (auto f : x->features)
                            if (st.at(e, f) == kNull) return false;
                        return true;
                      }};
      if (p.satisfied(t)) {
        reasons.push_back("tactic " + std::to_string(id) + " already specifies every requested feature");
        continue;
      }
      std::string reason;
      auto hits = bfs_fill(p, index, out.depth, reason);
      if (hits.empty()) {
        reasons.push_back("tactic " + std::to_string(id) + ": " + reason);
        continue;
      }
      add_found(std::move(hits));
    }
  } else if (const auto* x = std::get_if<constraint::MergeTactics>(&c)) {
    std::vector<Tactic> members;
    for (int id : x->tactics) members.push_back(find_tactic(current, id));
    const Tactic common = common_in_first_coords(members);
    if (common.non_null_count() == 0) {
      reasons.push_back("the tactics share no common value");
    } else {
      Found f = forced_removals(members.front(), common);
      f.state = stripped(std::move(f.state));
      out.depth = static_cast<int>(f.path.size());
      found.push_back(std::move(f));
    }
  } else if (const auto* x = std::get_if<constraint::ExpandTactic>(&c)) {
    const Tactic& t = find_tactic(current, x->tactic);
    const auto h = static_cast<std::size_t>(x->hits);
    const bool front = x->direction == Direction::kFront;
    const std::size_t fresh_begin = front ? 0 : t.length();
    auto is_fresh = [=](std::size_t e) { return e >= fresh_begin && e < fresh_begin + h; };
    SearchProblem p{pad(t, front ? h : 0, front ? 0 : h), front ? h : 0,
                    [=](const Tactic& st, Slot s) { return is_fresh(s.event) && st.event_non_null_count(s.event) == 0; },
                    [=](const Tactic& st) {
                      for (std::size_t e = fresh_begin; e < fresh_begin + h; ++e)
                        if (st.event_non_null_count(e) == 0) return false;
                      return true;
                    }};
    std::string reason;
    auto hits = bfs_fill(p, index, out.depth, reason);
    if (hits.empty()) {
      if (index.matches(p.start).empty())
        reason = "no occurrence of tactic " + std::to_string(t.id) + " has " + std::to_string(h) + " hit(s) " +
                 (front ? "before" : "after") + " it";
      reasons.push_back(reason);
    }
    add_found(std::move(hits));
  } else if (const auto* x = std::get_if<constraint::TrimTactic>(&c)) {
    const Tactic& t = find_tactic(current, x->tactic);
    const auto h = static_cast<std::size_t>(x->hits);
    if (h >= t.length()) {
      reasons.push_back("cannot trim " + std::to_string(h) + " hit(s) from a tactic of length " +
                        std::to_string(t.length()));
    } else {
      Tactic target = t;
      const std::size_t begin = x->direction == Direction::kFront ? 0 : t.length() - h;
      for (std::size_t e = begin; e < begin + h; ++e)
        for (std::size_t f = 0; f < t.k; ++f) target.at(e, f) = kNull;
      if (target.non_null_count() == 0) {
        reasons.push_back("trimming would leave no concrete value");
      } else {
        Found f = forced_removals(t, target);
        f.state = stripped(std::move(f.state));
        out.depth = static_cast<int>(f.path.size());
        found.push_back(std::move(f));
      }
    }
  }

  // Deduplicate, keep only candidates that occur, and number them in a stable order.
  std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
    if (a.state.length() != b.state.length()) return a.state.length() < b.state.length();
    return a.state.slots < b.state.slots;
  });
  std::unordered_set<Tactic, PatternHash, PatternEqual> seen;
  int next_id = first_id;
  for (auto& f : found) {
    if (!f.state.well_formed() || index.matches(f.state).empty()) continue;
    if (!seen.insert(f.state).second) continue;
    f.state.id = next_id++;
    f.state.pinned = false;
    out.candidates.push_back(std::move(f.state));
    out.modifications.push_back(std::move(f.path));
  }
  if (out.candidates.empty()) {
    out.depth = 0;
    std::string reason;
    for (std::size_t i = 0; i < reasons.size(); ++i) reason += (i ? "; " : "") + reasons[i];
    out.reason = reason.empty() ? "no candidate occurs in the data" : reason;
  }
  return out;
}

std::vector<std::size_t> candidate_order(const Dataset& d, std::span<const Tactic> candidates) {
  std::vector<std::size_t> freq;
  for (const auto& c : candidates) freq.push_back(count_matches(c, d));
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    const std::size_t na = candidates[a].slots.size() - candidates[a].non_null_count();
    const std::size_t nb = candidates[b].slots.size() - candidates[b].non_null_count();
    if (na != nb) return na < nb;
    return candidates[a].id < candidates[b].id;
  });
  return order;
}

std::vector<Tactic> fine_tune_optimize(const Dataset& d, std::span<const Tactic> current, std::span<const int> adjusted,
                                       std::span<const Tactic> candidates, const MetricParams& p, bool guarantee) {
  const std::set<int> adjusted_ids(adjusted.begin(), adjusted.end());
  CoverState state(d, p);
  for (const auto& t : current)
    if (!adjusted_ids.count(t.id)) state.add(t);

  std::vector<int> admitted;
  for (std::size_t i : candidate_order(d, candidates)) {
    const Tactic& ct = candidates[i];
    if (state.position_of(ct.id)) continue;
    const bool forced = guarantee && admitted.empty();
    if (!(state.delta_add(ct) < -kDlTolerance) && !forced) continue;
    state.add(ct);
    const std::vector<int> earlier = admitted;
    admitted.push_back(ct.id);
    for (int id : earlier) {
      const auto pos = state.position_of(id);
      if (pos && state.delta_remove(*pos) <= kDlTolerance) {
        state.remove(*pos);
        std::erase(admitted, id);
      }
    }
  }
  return state.tactics();
}

}  // namespace tacmine
