#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tacmine/model.hpp"

namespace tacmine {

// Two description lengths closer than this are treated as equal when the
// miner and the fine-tuning optimizer compare them.
inline constexpr double kDlTolerance = 1e-9;

struct IndexRange {
  int lo = 1;
  int hi = 1;
  bool contains(int start) const { return start >= lo && start <= hi; }
  bool operator==(const IndexRange&) const = default;
};

// Inclusive bounds on tactic length (in events); max absent means unbounded.
struct LengthRange {
  std::size_t min = 1;
  std::optional<std::size_t> max;
  bool contains(std::size_t len) const { return len >= min && (!max || len <= *max); }
  bool operator==(const LengthRange&) const = default;
};

struct MetricParams {
  double alpha = 1.0;
  double beta = 1.0;
  std::optional<IndexRange> index_range;
  std::optional<LengthRange> length_range;
  // feature id -> importance in [-1, 1]; absent features count as 0.
  std::map<std::size_t, double> importance;

  double importance_of(std::size_t feature) const;
  // Throws Error{kValidation} on out-of-range weights or bounds.
  void validate() const;

  bool operator==(const MetricParams&) const = default;
};

struct CoverResult {
  // Per tactic (same order as the input list), accepted usages sorted by (rally, start).
  std::vector<std::vector<Usage>> usages;
  // Per rally (dataset order), per feature: slots not described by a concrete tactic slot.
  std::vector<std::vector<std::size_t>> residual;
  std::vector<std::size_t> freq;

  std::size_t residual_total() const;
  std::size_t residual_of_feature(std::size_t f) const;
};

// Deterministic greedy cover. Per rally, every occurrence of every tactic is
// ranked by (more concrete slots, longer, earlier start, lower tactic id) and
// accepted unless it shares a hit with an already accepted occurrence.
CoverResult cover(const Dataset& d, std::span<const Tactic> tactics);

// Fraction of usages whose start lies outside the index range (0 when no range).
double index_penalty(std::span<const Usage> usages, const MetricParams& p);
// 0 when the tactic length is in range (or no range), 1 otherwise.
double length_penalty(const Tactic& t, const MetricParams& p);

// L*(S,T) = |T| + alpha * sum freq(t)(1 + idx_con + len_con)
//         + beta * sum_s sum_f residual(s,f)(1 + imp(f)).
// With default params this is exactly |T| + alpha*sum freq + beta*sum residual.
double description_length(const CoverResult& c, std::span<const Tactic> tactics, const MetricParams& p);
double description_length(const Dataset& d, std::span<const Tactic> tactics, const MetricParams& p);

struct ScoreReport {
  double empty_dl = 0;
  double dl = 0;
  // L*(S, {}) - L*(S, T)
  double score = 0;
  // Per tactic: L*(S, T - t) - L*(S, T). Positive means the tactic pays for itself.
  std::vector<double> importance;
};

ScoreReport score_and_importance(const Dataset& d, std::span<const Tactic> tactics, const MetricParams& p);

struct TacticStats {
  std::size_t freq = 0;
  // Empty when freq == 0.
  std::optional<double> win_rate;
  double importance = 0;
  // start index -> (wins, losses) from the focal player's perspective
  std::map<int, std::pair<std::size_t, std::size_t>> index_histogram;

  bool operator==(const TacticStats&) const = default;
};

TacticStats tactic_stats(const Dataset& d, const CoverResult& c, std::size_t tactic_pos, double importance = 0);

// Incrementally maintained cover. L* decomposes into |T| plus an independent
// cost per rally, so adding or removing a tactic only needs the rallies where
// it occurs to be re-covered. Produces the same cover as cover().
class CoverState {
 public:
  CoverState(const Dataset& d, MetricParams params);

  const Dataset& dataset() const { return *dataset_; }
  const MetricParams& params() const { return params_; }
  std::size_t size() const { return tactics_.size(); }
  const Tactic& tactic(std::size_t pos) const { return *tactics_[pos]; }
  std::vector<Tactic> tactics() const;
  std::optional<std::size_t> position_of(int tactic_id) const;

  double description_length() const;

  // L*(T + t) - L*(T) without modifying the state. t.id must not be in use.
  double delta_add(const Tactic& t) const;
  // L*(T - tactic(pos)) - L*(T).
  double delta_remove(std::size_t pos) const;

  void add(const Tactic& t);
  void remove(std::size_t pos);

  // Number of positions where t occurs in the dataset (overlaps included).
  std::size_t occurrence_count(const Tactic& t) const;
  // Rally positions (dataset order) where tactic(pos) occurs.
  const std::vector<std::uint32_t>& rallies_of(std::size_t pos) const { return tactic_rallies_[pos]; }
  // Accepted usage count of tactic(pos) in the current cover.
  std::size_t freq(std::size_t pos) const;

  // Accepted usage counts for every member, in member order.
  std::vector<std::size_t> freqs() const;
  // [feature][value] -> number of residual slots holding that value.
  std::vector<std::vector<std::size_t>> residual_value_counts() const;

  // (rally position, 1-based start) pairs, grouped by rally in dataset order.
  using Matches = std::vector<std::pair<std::uint32_t, int>>;
  Matches matches(const Tactic& t) const;
  // (member, 1-based start) for every occurrence of a member in the rally.
  std::vector<std::pair<const Tactic*, int>> occurrences_in(std::size_t rally) const;
  // (rally position, 0-based hit) where feature f holds value v.
  const std::vector<std::pair<std::uint32_t, std::uint16_t>>& postings(std::size_t f, ValueId v) const {
    return postings_[f][static_cast<std::size_t>(v)];
  }

  CoverResult result() const;
  // Same quantities as score_and_importance, in member order, computed
  // incrementally.
  ScoreReport score_report() const;

 private:
  struct Occurrence {
    const Tactic* tactic;
    int start;
    std::uint32_t non_null;
    std::uint32_t length;
  };
  static Occurrence occurrence(const Tactic& t, int start) {
    return {&t, start, static_cast<std::uint32_t>(t.non_null_count()), static_cast<std::uint32_t>(t.length())};
  }
  double rally_cost(std::size_t rally, std::span<const Occurrence> occurrences,
                    std::vector<const Occurrence*>* accepted = nullptr) const;

  const Dataset* dataset_;
  MetricParams params_;
  // postings_[f][v] lists (rally, 0-based hit) where feature f takes value v.
  std::vector<std::vector<std::vector<std::pair<std::uint32_t, std::uint16_t>>>> postings_;
  std::vector<std::unique_ptr<Tactic>> tactics_;
  std::vector<std::vector<std::uint32_t>> tactic_rallies_;
  std::vector<std::vector<Occurrence>> rally_occurrences_;
  std::vector<double> rally_cost_;
};

}  // namespace tacmine
