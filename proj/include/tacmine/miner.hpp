#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tacmine/cover.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

struct MinerConfig {
  std::uint64_t seed = 1;
  int max_iterations = 1000;
  // Consecutive iterations without an admission before mining stops.
  int patience = 10;
  int candidates_per_iteration = 200;
  int max_tactic_length = 8;

  void validate() const;
  bool operator==(const MinerConfig&) const = default;
};

using Rng = std::mt19937_64;

// Every 1-event pattern with a single concrete slot that occurs in d. These
// seed the combination pool and are never emitted as tactics themselves.
std::vector<Tactic> single_value_seeds(const Dataset& d);

// Aligns b so that its first event sits `offset` events after a's first event
// and takes the slot-wise union. Adjacent or gapped offsets concatenate;
// overlapping ones overlay. Empty when two concrete slots disagree.
std::optional<Tactic> combine(const Tactic& a, const Tactic& b, int offset);

// Samples combinations of two pool members (current tactics plus single
// values) at event-granularity alignments. The first member is drawn with
// probability proportional to its squared usage count (residual count for
// single values); the partner and alignment are drawn from what co-occurs
// around a random occurrence of the first, so every candidate has at least
// one match. A quarter of member draws instead propose the member with one
// concrete slot cleared.
class CandidateGenerator {
 public:
  CandidateGenerator(const Dataset& d, MinerConfig cfg);

  // Candidates get consecutive ids starting at next_id, which is advanced.
  std::vector<Tactic> generate(const CoverState& state, Rng& rng, int& next_id) const;

 private:
  const Dataset* dataset_;
  MinerConfig cfg_;
  std::vector<Tactic> seeds_;
};

// Greedy optimizer step. Candidates are tried in order of their marginal gain
// against the current state; each is admitted iff L* strictly drops, after
// which members whose removal does not raise L* are swept (pinned members
// are kept). A few rejected candidates with the widest coverage then get a
// replacement trial: the members blocking their matches are taken out, the
// candidate is added, blockers that still pay off are re-admitted, and the
// trial is kept only if L* strictly drops. Returns true when the state changed.
bool optimize(CoverState& state, std::vector<Tactic> candidates);

// Removes members (other than pinned ones) until every remaining member
// strictly pays for itself. Returns true when anything was removed.
bool sweep(CoverState& state);

// Alternates generation and optimization until `patience` consecutive
// iterations change nothing or the iteration budget is spent. `initial` tactics (typically pinned ones)
// seed the set; new tactics are numbered from first_id upward.
TacticSet mine_initial(const Dataset& d, const MetricParams& p, const MinerConfig& cfg,
                       std::span<const Tactic> initial = {}, int first_id = 1);

}  // namespace tacmine
