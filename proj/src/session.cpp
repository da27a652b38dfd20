#include "tacmine/session.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "tacmine/error.hpp"
#include "tacmine/io.hpp"

namespace tacmine {
namespace {

using nlohmann::json;

void sort_by_id(std::vector<Tactic>& ts) {
  std::sort(ts.begin(), ts.end(), [](const Tactic& a, const Tactic& b) { return a.id < b.id; });
}

double score_of(const Dataset& d, std::span<const Tactic> ts, const MetricParams& p) {
  return description_length(d, {}, p) - description_length(d, ts, p);
}

// Mined tactics that repeat a current pattern take over its id so unchanged
// tactics keep their identity across a remine.
void reuse_ids(std::vector<Tactic>& result, std::span<const Tactic> current) {
  std::unordered_map<Tactic, int, PatternHash, PatternEqual> by_pattern;
  for (const auto& t : current) by_pattern.emplace(t, t.id);
  std::set<int> taken;
  for (const auto& t : result)
    if (t.pinned) taken.insert(t.id);
  for (auto& t : result) {
    if (t.pinned) continue;
    auto it = by_pattern.find(t);
    if (it != by_pattern.end() && !taken.count(it->second)) {
      t.id = it->second;
      taken.insert(t.id);
    }
  }
}

}  // namespace

Session::Session(std::string id, std::shared_ptr<const Dataset> dataset, MetricParams base, MinerConfig cfg,
                 std::vector<Tactic> tactics)
    : id_(std::move(id)), dataset_(std::move(dataset)), base_(std::move(base)), cfg_(cfg) {
  if (!dataset_) throw Error(ErrorCode::kInvalidArgument, "session: missing dataset");
  base_.validate();
  cfg_.validate();
  std::set<int> ids;
  for (const auto& t : tactics) {
    validate_tactic(t, dataset_->schema);
    if (t.id <= 0 || !ids.insert(t.id).second)
      throw Error(ErrorCode::kValidation, "session: tactic ids must be unique and positive");
  }
  sort_by_id(tactics);
  state_.tactics = std::move(tactics);
  state_.params = base_;
  state_.next_id = ids.empty() ? 1 : *ids.rbegin() + 1;
}

Session Session::mine(std::string id, std::shared_ptr<const Dataset> dataset, MetricParams base, MinerConfig cfg) {
  if (!dataset) throw Error(ErrorCode::kInvalidArgument, "session: missing dataset");
  auto mined = mine_initial(*dataset, base, cfg);
  return Session(std::move(id), std::move(dataset), std::move(base), cfg, std::move(mined.tactics));
}

std::vector<TacticView> Session::view() const {
  CoverState state(*dataset_, state_.params);
  for (const auto& t : state_.tactics) state.add(t);
  const auto report = state.score_report();
  const auto result = state.result();
  std::vector<TacticView> out;
  out.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i)
    out.push_back({state.tactic(i), tactic_stats(*dataset_, result, i, report.importance[i]), result.usages[i]});
  std::sort(out.begin(), out.end(), [](const TacticView& a, const TacticView& b) { return a.tactic.id < b.tactic.id; });
  return out;
}

double Session::score() const { return score_of(*dataset_, state_.tactics, state_.params); }

AdjustmentDiff Session::preview(const Constraint& c) const {
  const Dataset& d = *dataset_;
  validate_constraint(c, d.schema, state_.tactics);

  AdjustmentDiff diff;
  diff.version = version_;
  diff.constraint = c;
  diff.old_score = score();
  diff.result = state_;

  if (is_global(c)) {
    const Constraint batch[] = {c};
    diff.result.params = compile_global(batch, state_.params);
    diff.result.globals.push_back(c);
    std::vector<Tactic> pinned;
    for (const auto& t : state_.tactics)
      if (t.pinned) pinned.push_back(t);
    auto mined = remine(d, diff.result.params, cfg_, pinned, state_.next_id);
    reuse_ids(mined.tactics, state_.tactics);
    diff.result.tactics = std::move(mined.tactics);
  } else {
    auto gen = generate_fine_tuning(c, state_.tactics, d, state_.next_id);
    if (gen.candidates.empty() && !gen.skip_guarantee) {
      diff.reason = gen.reason;
      diff.new_score = diff.old_score;
      return diff;
    }
    diff.result.tactics =
        fine_tune_optimize(d, state_.tactics, gen.adjusted, gen.candidates, state_.params, !gen.skip_guarantee);
  }

  auto& result = diff.result.tactics;
  sort_by_id(result);
  for (const auto& t : result) diff.result.next_id = std::max(diff.result.next_id, t.id + 1);

  std::set<int> before_ids, after_ids;
  for (const auto& t : state_.tactics) before_ids.insert(t.id);
  for (const auto& t : result) after_ids.insert(t.id);
  for (int id : before_ids)
    if (!after_ids.count(id)) diff.removed.push_back(id);

  CoverState state(d, diff.result.params);
  for (const auto& t : result) state.add(t);
  const auto report = state.score_report();
  const auto cov = state.result();
  diff.new_score = report.score;
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (before_ids.count(result[i].id)) continue;
    diff.added.push_back(result[i]);
    diff.added_stats.push_back(tactic_stats(d, cov, i, report.importance[i]));
  }
  return diff;
}

void Session::apply(const AdjustmentDiff& diff) {
  if (diff.version != version_)
    throw Error(ErrorCode::kStaleVersion,
                "session changed since the preview (preview version " + std::to_string(diff.version) +
                    ", current " + std::to_string(version_) + ")",
                {{"current_version", version_}});
  if (!diff.reason.empty()) throw Error(ErrorCode::kNoCandidates, diff.reason);
  HistoryEntry entry;
  entry.constraint = diff.constraint;
  entry.removed = diff.removed;
  for (const auto& t : diff.added) entry.added.push_back(t.id);
  entry.old_score = diff.old_score;
  entry.new_score = diff.new_score;
  entry.before = state_;
  history_.push_back(std::move(entry));
  state_ = diff.result;
  ++version_;
}

void Session::undo() {
  if (history_.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to undo");
  state_ = std::move(history_.back().before);
  history_.pop_back();
  ++version_;
}

void Session::set_pinned(int tactic_id, bool pinned) {
  auto it = std::find_if(state_.tactics.begin(), state_.tactics.end(), [&](const Tactic& t) { return t.id == tactic_id; });
  if (it == state_.tactics.end()) throw Error(ErrorCode::kNotFound, "unknown tactic " + std::to_string(tactic_id));
  if (it->pinned == pinned) return;
  it->pinned = pinned;
  ++version_;
}

json session_state_to_json(const SessionState& s, const FeatureSchema& schema) {
  json globals = json::array();
  for (const auto& c : s.globals) globals.push_back(constraint_to_json(c, schema));
  return {{"tactics", tactics_to_json(s.tactics, schema)},
          {"params", metric_params_to_json(s.params, schema)},
          {"globals", std::move(globals)},
          {"next_id", s.next_id}};
}

SessionState session_state_from_json(const json& j, const FeatureSchema& schema) {
  SessionState s;
  s.tactics = tactics_from_json(j.at("tactics"), schema);
  sort_by_id(s.tactics);
  s.params = metric_params_from_json(j.at("params"), schema);
  for (const auto& c : j.at("globals")) s.globals.push_back(constraint_from_json(c, schema));
  s.next_id = j.at("next_id").get<int>();
  return s;
}

json tactic_stats_to_json(const TacticStats& s) {
  json hist = json::array();
  for (const auto& [start, wl] : s.index_histogram) hist.push_back({{"start", start}, {"wins", wl.first}, {"losses", wl.second}});
  return {{"freq", s.freq},
          {"win_rate", s.win_rate ? json(*s.win_rate) : json(nullptr)},
          {"importance", s.importance},
          {"index_histogram", std::move(hist)}};
}

json diff_to_json(const AdjustmentDiff& d, const FeatureSchema& schema) {
  json added = json::array();
  for (std::size_t i = 0; i < d.added.size(); ++i) {
    json t = tactic_to_json(d.added[i], schema);
    t["stats"] = tactic_stats_to_json(d.added_stats[i]);
    added.push_back(std::move(t));
  }
  json out = {{"version", d.version},
              {"constraint", constraint_to_json(d.constraint, schema)},
              {"description", describe(d.constraint, schema)},
              {"removed", d.removed},
              {"added", std::move(added)},
              {"old_score", d.old_score},
              {"new_score", d.new_score},
              {"score_delta", d.new_score - d.old_score}};
  if (!d.reason.empty()) out["reason"] = d.reason;
  return out;
}

json Session::to_json() const {
  const auto& schema = dataset_->schema;
  json history = json::array();
  for (const auto& h : history_)
    history.push_back({{"constraint", constraint_to_json(h.constraint, schema)},
                       {"removed", h.removed},
                       {"added", h.added},
                       {"old_score", h.old_score},
                       {"new_score", h.new_score},
                       {"before", session_state_to_json(h.before, schema)}});
  return {{"format", "tacmine.session"},
          {"version", 1},
          {"id", id_},
          {"state_version", version_},
          {"base_params", metric_params_to_json(base_, schema)},
          {"miner", miner_config_to_json(cfg_)},
          {"state", session_state_to_json(state_, schema)},
          {"history", std::move(history)}};
}

Session Session::from_json(const json& j, std::shared_ptr<const Dataset> dataset) {
  if (!dataset) throw Error(ErrorCode::kInvalidArgument, "session: missing dataset");
  try {
    if (j.at("format") != "tacmine.session") throw Error(ErrorCode::kValidation, "not a session file");
    const auto& schema = dataset->schema;
    Session s(j.at("id").get<std::string>(), dataset, metric_params_from_json(j.at("base_params"), schema),
              miner_config_from_json(j.at("miner")), {});
    s.state_ = session_state_from_json(j.at("state"), schema);
    s.version_ = j.at("state_version").get<std::uint64_t>();
    for (const auto& h : j.at("history")) {
      HistoryEntry e;
      e.constraint = constraint_from_json(h.at("constraint"), schema);
      e.removed = h.at("removed").get<std::vector<int>>();
      e.added = h.at("added").get<std::vector<int>>();
      e.old_score = h.at("old_score").get<double>();
      e.new_score = h.at("new_score").get<double>();
      e.before = session_state_from_json(h.at("before"), schema);
      s.history_.push_back(std::move(e));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("session file: ") + e.what());
  }
}

}  // namespace tacmine
