#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/constraints.hpp"
#include "tacmine/cover.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

// Everything apply/undo swaps in and out.
struct SessionState {
  // Sorted by id.
  std::vector<Tactic> tactics;
  MetricParams params;
  // Accumulated global constraints, in application order.
  std::vector<Constraint> globals;
  int next_id = 1;

  bool operator==(const SessionState&) const = default;
};

struct AdjustmentDiff {
  // Session version the diff was computed against.
  std::uint64_t version = 0;
  Constraint constraint;
  std::vector<int> removed;
  std::vector<Tactic> added;
  // Parallel to added, measured in the resulting set.
  std::vector<TacticStats> added_stats;
  double old_score = 0;
  double new_score = 0;
  // Non-empty when the generator produced no candidates; the diff is then empty.
  std::string reason;
  SessionState result;

  bool empty() const { return removed.empty() && added.empty(); }
  bool operator==(const AdjustmentDiff&) const = default;
};

struct HistoryEntry {
  Constraint constraint;
  std::vector<int> removed;
  std::vector<int> added;
  double old_score = 0;
  double new_score = 0;
  SessionState before;

  bool operator==(const HistoryEntry&) const = default;
};

struct TacticView {
  Tactic tactic;
  TacticStats stats;
  std::vector<Usage> usages;
};

class Session {
 public:
  // Starts from an explicit tactic set (ids must be unique and positive).
  Session(std::string id, std::shared_ptr<const Dataset> dataset, MetricParams base, MinerConfig cfg,
          std::vector<Tactic> tactics);

  // Mines the initial set under the base params.
  static Session mine(std::string id, std::shared_ptr<const Dataset> dataset, MetricParams base, MinerConfig cfg);

  const std::string& id() const { return id_; }
  const Dataset& dataset() const { return *dataset_; }
  std::shared_ptr<const Dataset> dataset_ptr() const { return dataset_; }
  const MetricParams& base_params() const { return base_; }
  const MinerConfig& miner_config() const { return cfg_; }
  const SessionState& state() const { return state_; }
  const std::vector<Tactic>& tactics() const { return state_.tactics; }
  const MetricParams& params() const { return state_.params; }
  std::uint64_t version() const { return version_; }
  const std::vector<HistoryEntry>& history() const { return history_; }

  // Cover, stats and importance of the current set.
  std::vector<TacticView> view() const;
  double score() const;

  // Read-only: the diff applying c would produce. Throws Error{kValidation}
  // or Error{kNotFound} for invalid constraints.
  AdjustmentDiff preview(const Constraint& c) const;

  // Installs diff.result. Throws Error{kStaleVersion} if the session changed
  // since the preview and Error{kNoCandidates} for a diff without result.
  void apply(const AdjustmentDiff& diff);
  // Restores the state before the most recent apply. Throws
  // Error{kInvalidArgument} when the history is empty.
  void undo();
  // Pinned tactics survive remines and are never swept.
  void set_pinned(int tactic_id, bool pinned);

  // Session without its dataset, which is stored separately.
  nlohmann::json to_json() const;
  static Session from_json(const nlohmann::json& j, std::shared_ptr<const Dataset> dataset);

 private:
  std::string id_;
  std::shared_ptr<const Dataset> dataset_;
  MetricParams base_;
  MinerConfig cfg_;
  SessionState state_;
  std::uint64_t version_ = 0;
  std::vector<HistoryEntry> history_;
};

nlohmann::json session_state_to_json(const SessionState& s, const FeatureSchema& schema);
SessionState session_state_from_json(const nlohmann::json& j, const FeatureSchema& schema);
nlohmann::json diff_to_json(const AdjustmentDiff& d, const FeatureSchema& schema);
nlohmann::json tactic_stats_to_json(const TacticStats& s);

}  // namespace tacmine
