#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/constraints.hpp"
#include "tacmine/cover.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/synth.hpp"

namespace tacmine {

// Fewest slot disagreements over all event alignments of the two tactics;
// a concrete slot facing null or a missing event counts as a disagreement.
std::size_t aligned_difference(const Tactic& a, const Tactic& b);

// Fraction of planted tactics with some mined tactic at most one value
// different. Empty when nothing was planted.
std::optional<double> recovery_rate(std::span<const Tactic> planted, std::span<const Tactic> mined);

struct BenchConfig {
  std::vector<SynthParams> rows;
  MetricParams metric;
  MinerConfig miner;
  // Seeds the constraint order and the local constraint targets.
  std::uint64_t seed = 1;
  // Omit timings and hardware so identical configs give identical reports.
  bool deterministic = false;
};

// {"rows": [SynthParams...], "seed", "alpha", "beta", "miner": {...}}
BenchConfig bench_config_from_json(const nlohmann::json& j);

struct BenchRow {
  SynthParams params;
  double t_initial = 0;
  double avg_t_global = 0;
  double avg_t_local = 0;
  double max_t_global = 0;
  double max_t_local = 0;
  std::optional<double> recovery;
  std::size_t mined_tactics = 0;
  std::size_t globals_applied = 0;
  std::size_t locals_applied = 0;
  // Local constraints that were rejected or had no candidate.
  std::size_t locals_without_candidates = 0;
  double initial_score = 0;
  double final_score = 0;
};

struct BenchReport {
  nlohmann::json hardware;
  std::vector<BenchRow> rows;
  bool deterministic = false;
};

BenchReport run_benchmark(const BenchConfig& cfg);

nlohmann::json bench_report_to_json(const BenchReport& r);
// Fixed-width table with the columns |S| |s_i| k |T| |V| t_i avg.t_g avg.t_l
// followed by the recovery rate.
std::string bench_report_to_text(const BenchReport& r);

// CPU model, logical cores, compiler and build type.
nlohmann::json hardware_info();

}  // namespace tacmine
