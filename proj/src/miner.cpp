#include "tacmine/miner.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "tacmine/error.hpp"

namespace tacmine {

void MinerConfig::validate() const {
  if (max_iterations <= 0 || candidates_per_iteration <= 0 || max_tactic_length <= 0 || patience <= 0)
    throw Error(ErrorCode::kValidation, "miner: iteration, candidate, length and patience budgets must be positive");
}

std::vector<Tactic> single_value_seeds(const Dataset& d) {
  const std::size_t k = d.k();
  std::vector<std::vector<char>> seen(k);
  for (std::size_t f = 0; f < k; ++f) seen[f].assign(d.schema.value_count(f), 0);
  for (const auto& r : d.rallies)
    for (std::size_t i = 0; i < r.values.size(); ++i) seen[i % k][static_cast<std::size_t>(r.values[i])] = 1;
  std::vector<Tactic> out;
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t v = 0; v < seen[f].size(); ++v) {
      if (!seen[f][v]) continue;
      Tactic t(0, k, std::vector<ValueId>(k, kNull));
      t.at(0, f) = static_cast<ValueId>(v);
      out.push_back(std::move(t));
    }
  return out;
}

std::optional<Tactic> combine(const Tactic& a, const Tactic& b, int offset) {
  if (a.k != b.k || a.slots.empty() || b.slots.empty()) return std::nullopt;
  const int la = static_cast<int>(a.length());
  const int lb = static_cast<int>(b.length());
  const int lo = std::min(0, offset);
  const int hi = std::max(la, offset + lb);
  const std::size_t k = a.k;
  Tactic out(0, k, std::vector<ValueId>(static_cast<std::size_t>(hi - lo) * k, kNull));
  for (int e = 0; e < la; ++e)
    for (std::size_t f = 0; f < k; ++f) out.at(static_cast<std::size_t>(e - lo), f) = a.at(static_cast<std::size_t>(e), f);
  for (int e = 0; e < lb; ++e)
    for (std::size_t f = 0; f < k; ++f) {
      const ValueId v = b.at(static_cast<std::size_t>(e), f);
      if (v == kNull) continue;
      ValueId& slot = out.at(static_cast<std::size_t>(e + offset - lo), f);
      if (slot != kNull && slot != v) return std::nullopt;
      slot = v;
    }
  return out;
}

CandidateGenerator::CandidateGenerator(const Dataset& d, MinerConfig cfg)
    : dataset_(&d), cfg_(cfg), seeds_(single_value_seeds(d)) {}

std::vector<Tactic> CandidateGenerator::generate(const CoverState& state, Rng& rng, int& next_id) const {
  const auto& d = *dataset_;
  const std::size_t k = d.k();
  const std::size_t m = state.size();

  // Pool weights: members by usage, single values by how often they are left uncovered.
  const auto freqs = state.freqs();
  const auto residual = state.residual_value_counts();
  std::vector<double> weights;
  weights.reserve(m + seeds_.size());
  for (std::size_t i = 0; i < m; ++i) weights.push_back(static_cast<double>(freqs[i] * freqs[i]));
  for (const auto& s : seeds_) {
    for (std::size_t f = 0; f < k; ++f)
      if (s.at(0, f) != kNull) weights.push_back(static_cast<double>(residual[f][static_cast<std::size_t>(s.at(0, f))]));
  }
  if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0) return {};
  std::discrete_distribution<std::size_t> pick_first(weights.begin(), weights.end());

  std::unordered_set<Tactic, PatternHash, PatternEqual> seen;
  for (std::size_t i = 0; i < m; ++i) seen.insert(state.tactic(i));

  std::vector<Tactic> out;
  const int target = cfg_.candidates_per_iteration;
  const int max_attempts = target * 4;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < target; ++attempt) {
    const std::size_t first = pick_first(rng);
    const Tactic& a = first < m ? state.tactic(first) : seeds_[first - m];
    const int la = static_cast<int>(a.length());

    // Occasionally relax a member by one slot so over-specific members can
    // give way to the pattern they were grown from.
    if (first < m && a.non_null_count() > 2 && std::uniform_int_distribution<int>(0, 3)(rng) == 0) {
      std::vector<std::size_t> filled;
      for (std::size_t i = 0; i < a.slots.size(); ++i)
        if (a.slots[i] != kNull) filled.push_back(i);
      Tactic relaxed(0, k, a.slots);
      relaxed.slots[filled[std::uniform_int_distribution<std::size_t>(0, filled.size() - 1)(rng)]] = kNull;
      relaxed.strip_null_boundaries();
      if (!relaxed.well_formed() || relaxed.non_null_count() < 2) continue;
      if (!seen.insert(relaxed).second) continue;
      relaxed.id = next_id++;
      out.push_back(std::move(relaxed));
      continue;
    }

    // Anchor on one occurrence of the first member.
    std::uint32_t rally = 0;
    int start = 1;
    if (first < m) {
      const auto occ = state.matches(a);
      if (occ.empty()) continue;
      const auto& pick = occ[std::uniform_int_distribution<std::size_t>(0, occ.size() - 1)(rng)];
      rally = pick.first;
      start = pick.second;
    } else {
      std::size_t f = 0;
      while (a.at(0, f) == kNull) ++f;
      const auto& post = state.postings(f, a.at(0, f));
      if (post.empty()) continue;
      const auto& pick = post[std::uniform_int_distribution<std::size_t>(0, post.size() - 1)(rng)];
      rally = pick.first;
      start = pick.second + 1;
    }
    const Rally& r = d.rallies[rally];
    const int rlen = static_cast<int>(r.length());

    // Partner: another member occurring at an overlapping or adjacent
    // alignment in the same rally, or a single value observed there.
    std::vector<std::pair<const Tactic*, int>> partners;
    for (const auto& [t, s] : state.occurrences_in(rally)) {
      const int offset = s - start;
      const int lb = static_cast<int>(t->length());
      if (offset < -lb + 1 || offset > la) continue;
      if (t == &a && offset == 0) continue;
      partners.emplace_back(t, offset);
    }
    std::optional<Tactic> candidate;
    const bool use_member = !partners.empty() && std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    if (use_member) {
      const auto& [b, offset] = partners[std::uniform_int_distribution<std::size_t>(0, partners.size() - 1)(rng)];
      candidate = combine(a, *b, offset);
    } else {
      // Offsets -1..la: the hit before the occurrence, inside it, or right after it.
      const int lo = start > 1 ? -1 : 0;
      const int hi = std::min(la, rlen - start);
      const int offset = std::uniform_int_distribution<int>(lo, hi)(rng);
      std::vector<std::size_t> open;
      for (std::size_t f = 0; f < k; ++f)
        if (offset < 0 || offset >= la || a.at(static_cast<std::size_t>(offset), f) == kNull) open.push_back(f);
      if (open.empty()) continue;
      const std::size_t f = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
      Tactic single(0, k, std::vector<ValueId>(k, kNull));
      single.at(0, f) = r.at(static_cast<std::size_t>(start - 1 + offset), f);
      candidate = combine(a, single, offset);
    }
    if (!candidate || static_cast<int>(candidate->length()) > cfg_.max_tactic_length) continue;
    if (!candidate->well_formed() || candidate->non_null_count() < 2) continue;
    if (!seen.insert(*candidate).second) continue;
    candidate->id = next_id++;
    out.push_back(std::move(*candidate));
  }
  return out;
}

namespace {

// Sweeps members that share a rally with `dirty`, repeating until stable.
bool sweep_dirty(CoverState& state, std::vector<char>& dirty, int protect_id) {
  bool any = false;
  bool removed = true;
  while (removed) {
    removed = false;
    for (std::size_t i = 0; i < state.size(); ++i) {
      const Tactic& t = state.tactic(i);
      if (t.pinned || t.id == protect_id) continue;
      const auto& rallies = state.rallies_of(i);
      const bool touched = std::any_of(rallies.begin(), rallies.end(), [&](std::uint32_t r) { return dirty[r]; });
      if (!touched && !rallies.empty()) continue;
      if (state.delta_remove(i) <= kDlTolerance) {
        for (std::uint32_t r : rallies) dirty[r] = 1;
        state.remove(i);
        removed = any = true;
        break;
      }
    }
  }
  return any;
}

// Removes the unpinned members occupying c's match positions, adds c, then
// re-admits the removed members that still pay off. Kept only if L* drops;
// otherwise the previous member set is restored.
bool try_replace(CoverState& state, const Tactic& c) {
  const double before = state.description_length();
  std::vector<Tactic> previous = state.tactics();
  const int lc = static_cast<int>(c.length());

  std::vector<int> blocking;
  for (const auto& [rally, start] : state.matches(c))
    for (const auto& [t, s] : state.occurrences_in(rally)) {
      if (t->pinned) continue;
      if (s < start + lc && start < s + static_cast<int>(t->length())) blocking.push_back(t->id);
    }
  std::sort(blocking.begin(), blocking.end());
  blocking.erase(std::unique(blocking.begin(), blocking.end()), blocking.end());
  if (blocking.empty()) return false;

  std::vector<Tactic> removed;
  for (int id : blocking) {
    const auto pos = state.position_of(id);
    removed.push_back(state.tactic(*pos));
    state.remove(*pos);
  }
  state.add(c);
  // Passes in order of estimated gain; each admission re-checks its own delta.
  bool readmitted = true;
  while (readmitted && !removed.empty()) {
    readmitted = false;
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < removed.size(); ++i) {
      const double delta = state.delta_add(removed[i]);
      if (delta < -kDlTolerance) ranked.emplace_back(delta, i);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<char> taken(removed.size(), 0);
    for (const auto& [estimate, i] : ranked)
      if (state.delta_add(removed[i]) < -kDlTolerance) {
        state.add(removed[i]);
        taken[i] = 1;
        readmitted = true;
      }
    std::vector<Tactic> rest;
    for (std::size_t i = 0; i < removed.size(); ++i)
      if (!taken[i]) rest.push_back(std::move(removed[i]));
    removed = std::move(rest);
  }
  std::vector<char> dirty(state.dataset().rallies.size(), 0);
  for (std::uint32_t r : state.rallies_of(state.size() - 1)) dirty[r] = 1;
  sweep_dirty(state, dirty, std::numeric_limits<int>::min());
  if (state.description_length() < before - kDlTolerance) return true;

  std::unordered_set<int> keep;
  for (const auto& t : previous) keep.insert(t.id);
  for (std::size_t i = state.size(); i-- > 0;)
    if (!keep.count(state.tactic(i).id)) state.remove(i);
  for (const auto& t : previous)
    if (!state.position_of(t.id)) state.add(t);
  return false;
}

constexpr std::size_t kReplaceAttempts = 8;

}  // namespace

bool optimize(CoverState& state, std::vector<Tactic> candidates) {
  std::vector<std::pair<double, std::size_t>> order;
  std::vector<std::pair<std::size_t, std::size_t>> rejected;
  order.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (state.position_of(candidates[i].id)) continue;
    const double delta = state.delta_add(candidates[i]);
    if (delta < -kDlTolerance)
      order.emplace_back(delta, i);
    else
      rejected.emplace_back(state.occurrence_count(candidates[i]) * candidates[i].non_null_count(), i);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

  bool changed = false;
  std::vector<char> dirty(state.dataset().rallies.size(), 0);
  for (const auto& [estimate, i] : order) {
    const Tactic& c = candidates[i];
    if (state.delta_add(c) >= -kDlTolerance) continue;
    state.add(c);
    changed = true;
    std::fill(dirty.begin(), dirty.end(), 0);
    for (std::uint32_t r : state.rallies_of(state.size() - 1)) dirty[r] = 1;
    sweep_dirty(state, dirty, c.id);
  }

  // Candidates blocked by higher-priority members get a replacement trial,
  // widest coverage first.
  std::stable_sort(rejected.begin(), rejected.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  if (rejected.size() > kReplaceAttempts) rejected.resize(kReplaceAttempts);
  for (const auto& [coverage, i] : rejected) {
    if (coverage < 4 || state.position_of(candidates[i].id)) continue;
    if (try_replace(state, candidates[i])) changed = true;
  }
  return changed;
}

bool sweep(CoverState& state) {
  std::vector<char> dirty(state.dataset().rallies.size(), 1);
  return sweep_dirty(state, dirty, /*protect_id=*/std::numeric_limits<int>::min());
}

TacticSet mine_initial(const Dataset& d, const MetricParams& p, const MinerConfig& cfg, std::span<const Tactic> initial,
                       int first_id) {
  cfg.validate();
  CoverState state(d, p);
  int next_id = first_id;
  for (const auto& t : initial) {
    state.add(t);
    next_id = std::max(next_id, t.id + 1);
  }
  // Internal candidate ids live above every id handed out below so the final
  // renumbering keeps the relative order (and therefore cover tie-breaks).
  int candidate_id = next_id;

  CandidateGenerator generator(d, cfg);
  Rng rng(cfg.seed);
  int stalled = 0;
  for (int it = 0; it < cfg.max_iterations && stalled < cfg.patience; ++it) {
    auto candidates = generator.generate(state, rng, candidate_id);
    stalled = optimize(state, std::move(candidates)) ? 0 : stalled + 1;
  }
  sweep(state);

  std::vector<Tactic> tactics = state.tactics();
  std::sort(tactics.begin(), tactics.end(), [](const Tactic& a, const Tactic& b) { return a.id < b.id; });
  std::unordered_set<int> kept_ids;
  for (const auto& t : initial) kept_ids.insert(t.id);
  for (auto& t : tactics)
    if (!kept_ids.count(t.id)) t.id = next_id++;
  std::sort(tactics.begin(), tactics.end(), [](const Tactic& a, const Tactic& b) { return a.id < b.id; });

  TacticSet out;
  out.usages = cover(d, tactics).usages;
  out.tactics = std::move(tactics);
  return out;
}

}  // namespace tacmine
