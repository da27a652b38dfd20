#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tacmine/bench.hpp"
#include "tacmine/constraints.hpp"
#include "tacmine/cover.hpp"
#include "tacmine/error.hpp"
#include "tacmine/io.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/session.hpp"
#include "tacmine/synth.hpp"

using json = nlohmann::json;
using namespace tacmine;

namespace {

struct Common {
  std::string dataset;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::string out;
};

void add_metric_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--alpha", c.alpha, "Weight of the tactic usage term");
  cmd->add_option("--beta", c.beta, "Weight of the residual term");
}

MetricParams base_params(const Common& c, MetricParams p = {}) {
  if (c.alpha) p.alpha = *c.alpha;
  if (c.beta) p.beta = *c.beta;
  p.validate();
  return p;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

json score_json(const Dataset& d, const std::vector<Tactic>& tactics, const MetricParams& p) {
  const auto report = score_and_importance(d, tactics, p);
  const auto c = cover(d, tactics);
  json per = json::array();
  for (std::size_t i = 0; i < tactics.size(); ++i) {
    json t = tactic_stats_to_json(tactic_stats(d, c, i, report.importance[i]));
    t["id"] = tactics[i].id;
    per.push_back(std::move(t));
  }
  return {{"empty_description_length", report.empty_dl},
          {"description_length", report.dl},
          {"score", report.score},
          {"residual", c.residual_total()},
          {"tactics", std::move(per)}};
}

json tactic_set_json(const Dataset& d, const std::vector<Tactic>& tactics, const MetricParams& p,
                     const MinerConfig& m) {
  return {{"format", "tacmine.tactic-set"},
          {"version", 1},
          {"params", metric_params_to_json(p, d.schema)},
          {"miner", miner_config_to_json(m)},
          {"tactics", tactics_to_json(tactics, d.schema)},
          {"report", score_json(d, tactics, p)}};
}

struct TacticSetFile {
  std::vector<Tactic> tactics;
  MetricParams params;
  MinerConfig miner;
};

TacticSetFile read_tactic_set(const std::string& path, const Dataset& d) {
  const json j = read_json_file(path);
  if (j.value("format", "") != "tacmine.tactic-set") throw Error(ErrorCode::kValidation, path + ": not a tactic-set file");
  TacticSetFile f;
  f.tactics = tactics_from_json(j.at("tactics"), d.schema);
  if (j.contains("params")) f.params = metric_params_from_json(j["params"], d.schema);
  if (j.contains("miner")) f.miner = miner_config_from_json(j["miner"]);
  return f;
}

std::vector<Constraint> read_script(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot read " + path);
  std::vector<Constraint> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kValidation, path + ":" + std::to_string(n) + ": not valid JSON");
    try {
      out.push_back(constraint_from_json(j, schema));
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int run_gen(const Common& c, SynthParams p, const std::string& params_file, const std::string& truth) {
  if (!params_file.empty()) p = synth_params_from_json(read_json_file(params_file));
  if (c.seed) p.seed = *c.seed;
  p.validate();
  const auto r = generate(p);
  emit(c.out, dataset_to_json(r.dataset).dump(2) + "\n");
  if (!truth.empty()) write_json_file(truth, ground_truth_to_json(r));
  return 0;
}

int run_mine(const Common& c, MinerConfig m) {
  const Dataset d = load_dataset(c.dataset);
  if (c.seed) m.seed = *c.seed;
  m.validate();
  const auto p = base_params(c);
  const auto set = mine_initial(d, p, m);
  emit(c.out, tactic_set_json(d, set.tactics, p, m).dump(2) + "\n");
  return 0;
}

int run_suggest(const Common& c, const std::string& tactics_file, const std::string& script) {
  auto d = std::make_shared<const Dataset>(load_dataset(c.dataset));
  auto file = read_tactic_set(tactics_file, *d);
  if (c.seed) file.miner.seed = *c.seed;
  Session s("cli", d, base_params(c, file.params), file.miner, file.tactics);
  json log = json::array();
  for (const auto& con : read_script(script, d->schema)) {
    const auto diff = s.preview(con);
    json entry = diff_to_json(diff, d->schema);
    entry["applied"] = diff.reason.empty();
    if (diff.reason.empty()) s.apply(diff);
    log.push_back(std::move(entry));
  }
  json out = tactic_set_json(*d, s.tactics(), s.params(), file.miner);
  out["adjustments"] = std::move(log);
  emit(c.out, out.dump(2) + "\n");
  return 0;
}

int run_score(const Common& c, const std::string& tactics_file) {
  const Dataset d = load_dataset(c.dataset);
  const auto file = read_tactic_set(tactics_file, d);
  emit(c.out, score_json(d, file.tactics, base_params(c, file.params)).dump(2) + "\n");
  return 0;
}

int run_bench(const Common& c, const std::string& config, const std::string& report, bool deterministic) {
  BenchConfig cfg;
  if (!config.empty()) {
    cfg = bench_config_from_json(read_json_file(config));
  } else {
    cfg.rows.push_back(SynthParams{});
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.metric = base_params(c, cfg.metric);
  cfg.deterministic = cfg.deterministic || deterministic;
  const auto r = run_benchmark(cfg);
  if (!report.empty()) write_text_file(report, bench_report_to_json(r).dump(2) + "\n");
  emit(c.out, bench_report_to_text(r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactic mining for multivariate event sequences"};
  app.require_subcommand(1);
  Common c;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset with planted tactics");
  SynthParams sp;
  std::string params_file, truth;
  gen->add_option("--params", params_file, "JSON file with generator parameters")->check(CLI::ExistingFile);
  gen->add_option("--rallies", sp.n_sequences, "Number of sequences");
  gen->add_option("--length", sp.sequence_length, "Hits per sequence");
  gen->add_option("--features", sp.n_features, "Features per hit");
  gen->add_option("--tactics", sp.n_tactics, "Planted tactics");
  gen->add_option("--values", sp.values_per_feature, "Values per feature");
  gen->add_option("--embed", sp.embed_fraction, "Fraction of sequences each tactic is written into");
  gen->add_option("--seed", c.seed, "Random seed");
  gen->add_option("--out", c.out, "Dataset output path (stdout when omitted)");
  gen->add_option("--truth", truth, "Ground-truth output path");

  auto* mine = app.add_subcommand("mine", "Mine the initial tactic set");
  MinerConfig mc;
  mine->add_option("--dataset", c.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  mine->add_option("--seed", c.seed, "Miner seed");
  mine->add_option("--max-iterations", mc.max_iterations, "Iteration budget");
  mine->add_option("--patience", mc.patience, "Idle iterations before stopping");
  mine->add_option("--candidates", mc.candidates_per_iteration, "Candidates sampled per iteration");
  mine->add_option("--max-length", mc.max_tactic_length, "Longest tactic the miner proposes");
  mine->add_option("--out", c.out, "Tactic-set output path (stdout when omitted)");
  add_metric_flags(mine, c);

  auto* suggest = app.add_subcommand("suggest", "Apply a constraint script to a tactic set");
  std::string tactics_file, script;
  suggest->add_option("--dataset", c.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  suggest->add_option("--tactics", tactics_file, "Tactic-set file")->required()->check(CLI::ExistingFile);
  suggest->add_option("--constraints", script, "One JSON constraint per line")->required()->check(CLI::ExistingFile);
  suggest->add_option("--seed", c.seed, "Miner seed for global constraints");
  suggest->add_option("--out", c.out, "Adjusted tactic-set output path (stdout when omitted)");
  add_metric_flags(suggest, c);

  auto* score = app.add_subcommand("score", "Description length, score and per-tactic statistics");
  score->add_option("--dataset", c.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  score->add_option("--tactics", tactics_file, "Tactic-set file")->required()->check(CLI::ExistingFile);
  score->add_option("--out", c.out, "Report output path (stdout when omitted)");
  add_metric_flags(score, c);

  auto* bench = app.add_subcommand("bench", "Runtime and recovery benchmark");
  std::string config, report;
  bool deterministic = false;
  bench->add_option("--config", config, "JSON benchmark config (default: one 500/10/3/25/10 row)")
      ->check(CLI::ExistingFile);
  bench->add_option("--seed", c.seed, "Seed for constraint order and targets");
  bench->add_option("--report", report, "Machine-readable report path");
  bench->add_option("--out", c.out, "Text table path (stdout when omitted)");
  bench->add_flag("--deterministic", deterministic, "Omit timings and hardware from the report");
  add_metric_flags(bench, c);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(c, sp, params_file, truth);
    if (*mine) return run_mine(c, mc);
    if (*suggest) return run_suggest(c, tactics_file, script);
    if (*score) return run_score(c, tactics_file);
    if (*bench) return run_bench(c, config, report, deterministic);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
