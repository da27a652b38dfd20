#include "tacmine/cover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tacmine/error.hpp"

namespace tacmine {
namespace {

struct Candidate {
  std::size_t tactic_pos;
  int id;
  std::size_t non_null;
  std::size_t length;
  int start;
};

bool higher_priority(std::size_t nn_a, std::size_t len_a, int start_a, int id_a, std::size_t nn_b,
                     std::size_t len_b, int start_b, int id_b) {
  if (nn_a != nn_b) return nn_a > nn_b;
  if (len_a != len_b) return len_a > len_b;
  if (start_a != start_b) return start_a < start_b;
  return id_a < id_b;
}

double usage_cost(const Tactic& t, int start, const MetricParams& p) {
  double extra = length_penalty(t, p);
  if (p.index_range && !p.index_range->contains(start)) extra += 1.0;
  return p.alpha * (1.0 + extra);
}

}  // namespace

double MetricParams::importance_of(std::size_t feature) const {
  const auto it = importance.find(feature);
  return it == importance.end() ? 0.0 : it->second;
}

void MetricParams::validate() const {
  if (!(alpha >= 0) || !(beta >= 0)) throw Error(ErrorCode::kValidation, "metric: alpha and beta must be >= 0");
  for (const auto& [f, w] : importance)
    if (!(w >= -1.0 && w <= 1.0))
      throw Error(ErrorCode::kValidation, "metric: importance of feature " + std::to_string(f) + " outside [-1, 1]");
  if (index_range && index_range->lo > index_range->hi)
    throw Error(ErrorCode::kValidation, "metric: index range lo > hi");
  if (length_range && length_range->max && length_range->min > *length_range->max)
    throw Error(ErrorCode::kValidation, "metric: length range min > max");
}

std::size_t CoverResult::residual_total() const {
  std::size_t n = 0;
  for (const auto& r : residual) n += std::accumulate(r.begin(), r.end(), std::size_t{0});
  return n;
}

std::size_t CoverResult::residual_of_feature(std::size_t f) const {
  std::size_t n = 0;
  for (const auto& r : residual) n += r.at(f);
  return n;
}

CoverResult cover(const Dataset& d, std::span<const Tactic> tactics) {
  const std::size_t k = d.k();
  CoverResult out;
  out.usages.resize(tactics.size());
  out.freq.assign(tactics.size(), 0);
  out.residual.reserve(d.rallies.size());

  std::vector<Candidate> candidates;
  std::vector<char> claimed;
  std::vector<char> covered;
  for (const auto& rally : d.rallies) {
    const std::size_t len = rally.length();
    candidates.clear();
    for (std::size_t i = 0; i < tactics.size(); ++i) {
      const auto& t = tactics[i];
      const int last = static_cast<int>(len) - static_cast<int>(t.length()) + 1;
      for (int s = 1; s <= last; ++s)
        if (match_at(t, rally, s)) candidates.push_back({i, t.id, t.non_null_count(), t.length(), s});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return higher_priority(a.non_null, a.length, a.start, a.id, b.non_null, b.length, b.start, b.id);
    });

    claimed.assign(len, 0);
    covered.assign(len * k, 0);
    for (const auto& c : candidates) {
      const auto first = static_cast<std::size_t>(c.start - 1);
      bool free = true;
      for (std::size_t h = first; h < first + c.length && free; ++h) free = !claimed[h];
      if (!free) continue;
      const auto& t = tactics[c.tactic_pos];
      for (std::size_t e = 0; e < c.length; ++e) {
        claimed[first + e] = 1;
        for (std::size_t f = 0; f < k; ++f)
          if (t.at(e, f) != kNull) covered[(first + e) * k + f] = 1;
      }
      out.usages[c.tactic_pos].push_back({rally.id, c.start});
    }

    std::vector<std::size_t> residual(k, 0);
    for (std::size_t h = 0; h < len; ++h)
      for (std::size_t f = 0; f < k; ++f) residual[f] += !covered[h * k + f];
    out.residual.push_back(std::move(residual));
  }
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    std::sort(out.usages[i].begin(), out.usages[i].end());
    out.freq[i] = out.usages[i].size();
  }
  return out;
}

double index_penalty(std::span<const Usage> usages, const MetricParams& p) {
  if (!p.index_range || usages.empty()) return 0.0;
  const auto out = std::count_if(usages.begin(), usages.end(),
                                 [&](const Usage& u) { return !p.index_range->contains(u.start); });
  return static_cast<double>(out) / static_cast<double>(usages.size());
}

double length_penalty(const Tactic& t, const MetricParams& p) {
  if (!p.length_range) return 0.0;
  return p.length_range->contains(t.length()) ? 0.0 : 1.0;
}

double description_length(const CoverResult& c, std::span<const Tactic> tactics, const MetricParams& p) {
  double usage_term = 0;
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    const double freq = static_cast<double>(c.freq[i]);
    // freq * idx_con is the out-of-range usage count; kept integral to avoid
    // reintroducing a rounding step through the fraction.
    double out_of_range = 0;
    if (p.index_range)
      for (const auto& u : c.usages[i]) out_of_range += !p.index_range->contains(u.start);
    usage_term += freq + out_of_range + freq * length_penalty(tactics[i], p);
  }
  double residual_term = 0;
  for (const auto& per_feature : c.residual)
    for (std::size_t f = 0; f < per_feature.size(); ++f)
      residual_term += static_cast<double>(per_feature[f]) * (1.0 + p.importance_of(f));
  return static_cast<double>(tactics.size()) + p.alpha * usage_term + p.beta * residual_term;
}

double description_length(const Dataset& d, std::span<const Tactic> tactics, const MetricParams& p) {
  return description_length(cover(d, tactics), tactics, p);
}

ScoreReport score_and_importance(const Dataset& d, std::span<const Tactic> tactics, const MetricParams& p) {
  ScoreReport report;
  report.empty_dl = description_length(d, {}, p);
  report.dl = description_length(d, tactics, p);
  report.score = report.empty_dl - report.dl;
  std::vector<Tactic> without(tactics.begin(), tactics.end());
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    without.erase(without.begin() + static_cast<std::ptrdiff_t>(i));
    report.importance.push_back(description_length(d, without, p) - report.dl);
    without.insert(without.begin() + static_cast<std::ptrdiff_t>(i), tactics[i]);
  }
  return report;
}

TacticStats tactic_stats(const Dataset& d, const CoverResult& c, std::size_t tactic_pos, double importance) {
  TacticStats stats;
  stats.importance = importance;
  const auto& usages = c.usages.at(tactic_pos);
  stats.freq = usages.size();
  std::size_t wins = 0;
  for (const auto& u : usages) {
    const auto idx = d.rally_index(u.rally_id);
    const bool won = idx && d.rallies[*idx].winner == d.focal_player;
    wins += won;
    auto& bucket = stats.index_histogram[u.start];
    (won ? bucket.first : bucket.second) += 1;
  }
  if (stats.freq > 0) stats.win_rate = static_cast<double>(wins) / static_cast<double>(stats.freq);
  return stats;
}

// ---------------------------------------------------------------------------
// CoverState

CoverState::CoverState(const Dataset& d, MetricParams params) : dataset_(&d), params_(std::move(params)) {
  params_.validate();
  const std::size_t k = d.k();
  postings_.resize(k);
  for (std::size_t f = 0; f < k; ++f) postings_[f].resize(d.schema.value_count(f));
  for (std::uint32_t r = 0; r < d.rallies.size(); ++r) {
    const auto& rally = d.rallies[r];
    for (std::size_t h = 0; h < rally.length(); ++h)
      for (std::size_t f = 0; f < k; ++f)
        postings_[f][static_cast<std::size_t>(rally.at(h, f))].emplace_back(r, static_cast<std::uint16_t>(h));
  }
  rally_occurrences_.resize(d.rallies.size());
  rally_cost_.resize(d.rallies.size());
  for (std::size_t r = 0; r < d.rallies.size(); ++r) rally_cost_[r] = rally_cost(r, {});
}

std::vector<Tactic> CoverState::tactics() const {
  std::vector<Tactic> out;
  out.reserve(tactics_.size());
  for (const auto& t : tactics_) out.push_back(*t);
  return out;
}

std::optional<std::size_t> CoverState::position_of(int tactic_id) const {
  for (std::size_t i = 0; i < tactics_.size(); ++i)
    if (tactics_[i]->id == tactic_id) return i;
  return std::nullopt;
}

CoverState::Matches CoverState::matches(const Tactic& t) const {
  Matches out;
  const auto& d = *dataset_;
  if (t.k != d.k() || t.slots.empty()) return out;
  // Anchor on the rarest concrete slot and verify each aligned window.
  const std::vector<std::pair<std::uint32_t, std::uint16_t>>* best = nullptr;
  std::size_t anchor_event = 0;
  for (std::size_t e = 0; e < t.length(); ++e)
    for (std::size_t f = 0; f < t.k; ++f) {
      const ValueId v = t.at(e, f);
      if (v == kNull) continue;
      const auto& list = postings_[f][static_cast<std::size_t>(v)];
      if (!best || list.size() < best->size()) {
        best = &list;
        anchor_event = e;
      }
    }
  if (!best) return out;
  for (const auto& [r, h] : *best) {
    if (h < anchor_event) continue;
    const int start = static_cast<int>(h - anchor_event) + 1;
    if (match_at(t, d.rallies[r], start)) out.emplace_back(r, start);
  }
  return out;
}

double CoverState::rally_cost(std::size_t rally, std::span<const Occurrence> occurrences,
                              std::vector<const Occurrence*>* accepted) const {
  const auto& r = dataset_->rallies[rally];
  const std::size_t k = r.k;
  const std::size_t len = r.length();

  thread_local std::vector<const Occurrence*> order;
  thread_local std::vector<char> claimed;
  thread_local std::vector<char> covered;
  order.clear();
  for (const auto& o : occurrences) order.push_back(&o);
  std::sort(order.begin(), order.end(), [](const Occurrence* a, const Occurrence* b) {
    return higher_priority(a->non_null, a->length, a->start, a->tactic->id, b->non_null, b->length, b->start,
                           b->tactic->id);
  });
  claimed.assign(len, 0);
  covered.assign(len * k, 0);
  double usage_term = 0;
  for (const Occurrence* o : order) {
    const auto first = static_cast<std::size_t>(o->start - 1);
    const std::size_t tlen = o->length;
    bool free = true;
    for (std::size_t h = first; h < first + tlen && free; ++h) free = !claimed[h];
    if (!free) continue;
    for (std::size_t e = 0; e < tlen; ++e) {
      claimed[first + e] = 1;
      for (std::size_t f = 0; f < k; ++f)
        if (o->tactic->at(e, f) != kNull) covered[(first + e) * k + f] = 1;
    }
    usage_term += usage_cost(*o->tactic, o->start, params_);
    if (accepted) accepted->push_back(o);
  }
  double residual_term = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::size_t residual = 0;
    for (std::size_t h = 0; h < len; ++h) residual += !covered[h * k + f];
    residual_term += static_cast<double>(residual) * (1.0 + params_.importance_of(f));
  }
  return usage_term + params_.beta * residual_term;
}

double CoverState::description_length() const {
  double total = static_cast<double>(tactics_.size());
  for (double c : rally_cost_) total += c;
  return total;
}

double CoverState::delta_add(const Tactic& t) const {
  const Matches found = matches(t);
  double delta = 1.0;
  std::vector<Occurrence> scratch;
  for (std::size_t i = 0; i < found.size();) {
    const std::uint32_t r = found[i].first;
    scratch.assign(rally_occurrences_[r].begin(), rally_occurrences_[r].end());
    for (; i < found.size() && found[i].first == r; ++i) scratch.push_back(occurrence(t, found[i].second));
    delta += rally_cost(r, scratch) - rally_cost_[r];
  }
  return delta;
}

double CoverState::delta_remove(std::size_t pos) const {
  const Tactic* target = tactics_.at(pos).get();
  double delta = -1.0;
  std::vector<Occurrence> scratch;
  for (const std::uint32_t r : tactic_rallies_[pos]) {
    scratch.clear();
    for (const auto& o : rally_occurrences_[r])
      if (o.tactic != target) scratch.push_back(o);
    delta += rally_cost(r, scratch) - rally_cost_[r];
  }
  return delta;
}

void CoverState::add(const Tactic& t) {
  if (position_of(t.id)) throw Error(ErrorCode::kInvalidArgument, "cover: duplicate tactic id " + std::to_string(t.id));
  tactics_.push_back(std::make_unique<Tactic>(t));
  const Tactic* stored = tactics_.back().get();
  std::vector<std::uint32_t> rallies;
  for (const auto& [r, start] : matches(*stored)) {
    rally_occurrences_[r].push_back(occurrence(*stored, start));
    if (rallies.empty() || rallies.back() != r) rallies.push_back(r);
  }
  for (const std::uint32_t r : rallies) rally_cost_[r] = rally_cost(r, rally_occurrences_[r]);
  tactic_rallies_.push_back(std::move(rallies));
}

void CoverState::remove(std::size_t pos) {
  const Tactic* target = tactics_.at(pos).get();
  for (const std::uint32_t r : tactic_rallies_[pos]) {
    auto& occ = rally_occurrences_[r];
    occ.erase(std::remove_if(occ.begin(), occ.end(), [&](const Occurrence& o) { return o.tactic == target; }),
              occ.end());
    rally_cost_[r] = rally_cost(r, occ);
  }
  tactics_.erase(tactics_.begin() + static_cast<std::ptrdiff_t>(pos));
  tactic_rallies_.erase(tactic_rallies_.begin() + static_cast<std::ptrdiff_t>(pos));
}

std::size_t CoverState::occurrence_count(const Tactic& t) const { return matches(t).size(); }

std::size_t CoverState::freq(std::size_t pos) const {
  const Tactic* target = tactics_.at(pos).get();
  std::size_t n = 0;
  std::vector<const Occurrence*> accepted;
  for (const std::uint32_t r : tactic_rallies_[pos]) {
    accepted.clear();
    rally_cost(r, rally_occurrences_[r], &accepted);
    for (const Occurrence* o : accepted) n += o->tactic == target;
  }
  return n;
}

std::vector<std::size_t> CoverState::freqs() const {
  std::vector<std::size_t> out(tactics_.size(), 0);
  std::unordered_map<const Tactic*, std::size_t> index;
  for (std::size_t i = 0; i < tactics_.size(); ++i) index.emplace(tactics_[i].get(), i);
  std::vector<const Occurrence*> accepted;
  for (std::size_t r = 0; r < rally_occurrences_.size(); ++r) {
    if (rally_occurrences_[r].empty()) continue;
    accepted.clear();
    rally_cost(r, rally_occurrences_[r], &accepted);
    for (const Occurrence* o : accepted) ++out[index.at(o->tactic)];
  }
  return out;
}

std::vector<std::vector<std::size_t>> CoverState::residual_value_counts() const {
  const auto& d = *dataset_;
  const std::size_t k = d.k();
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t f = 0; f < k; ++f) out[f].assign(d.schema.value_count(f), 0);
  std::vector<const Occurrence*> accepted;
  std::vector<char> covered;
  for (std::size_t r = 0; r < d.rallies.size(); ++r) {
    const auto& rally = d.rallies[r];
    covered.assign(rally.values.size(), 0);
    accepted.clear();
    if (!rally_occurrences_[r].empty()) rally_cost(r, rally_occurrences_[r], &accepted);
    for (const Occurrence* o : accepted) {
      const auto first = static_cast<std::size_t>(o->start - 1);
      for (std::size_t e = 0; e < o->length; ++e)
        for (std::size_t f = 0; f < k; ++f)
          if (o->tactic->at(e, f) != kNull) covered[(first + e) * k + f] = 1;
    }
    for (std::size_t i = 0; i < rally.values.size(); ++i)
      if (!covered[i]) ++out[i % k][static_cast<std::size_t>(rally.values[i])];
  }
  return out;
}

std::vector<std::pair<const Tactic*, int>> CoverState::occurrences_in(std::size_t rally) const {
  std::vector<std::pair<const Tactic*, int>> out;
  for (const auto& o : rally_occurrences_.at(rally)) out.emplace_back(o.tactic, o.start);
  return out;
}

CoverResult CoverState::result() const { return cover(*dataset_, tactics()); }

ScoreReport CoverState::score_report() const {
  ScoreReport report;
  report.empty_dl = tacmine::description_length(*dataset_, std::span<const Tactic>{}, params_);
  report.dl = description_length();
  report.score = report.empty_dl - report.dl;
  report.importance.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) report.importance.push_back(delta_remove(i));
  return report;
}

}  // namespace tacmine
