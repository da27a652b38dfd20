#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tacmine/bench.hpp"
#include "tacmine/error.hpp"

using namespace tacmine;
using json = nlohmann::json;

namespace {

BenchConfig tiny() {
  BenchConfig cfg;
  SynthParams a;
  a.n_sequences = 40;
  a.n_tactics = 2;
  a.values_per_feature = 5;
  a.embed_fraction = 0.25;
  SynthParams b = a;
  b.n_tactics = 0;
  cfg.rows = {a, b};
  cfg.miner.max_iterations = 30;
  cfg.seed = 4;
  cfg.deterministic = true;
  return cfg;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("aligned difference agrees with the reference") {
    std::mt19937_64 rng(61);
    const auto d = oracle::random_dataset(rng, 5, 4, 8, 2, 3);
    for (int i = 0; i < 400; ++i) {
      const auto a = oracle::random_tactic(rng, d, 4, 0.6, 1, false);
      const auto b = oracle::random_tactic(rng, d, 4, 0.6, 2, false);
      CHECK(aligned_difference(a, b) == oracle::min_slot_edits(a, b));
      CHECK(aligned_difference(a, b) == aligned_difference(b, a));
    }
    const Tactic t(1, 2, {0, 1, kNull, 1});
    CHECK(aligned_difference(t, t) == 0);
  }

  TEST_CASE("recovery rate") {
    const std::vector<Tactic> planted{Tactic(1, 2, {0, 1, 1, 1}), Tactic(2, 2, {2, 2})};
    CHECK_FALSE(recovery_rate(std::vector<Tactic>{}, planted));
    CHECK(recovery_rate(planted, planted) == 1.0);
    CHECK(recovery_rate(planted, std::vector<Tactic>{}) == 0.0);
    const std::vector<Tactic> near{Tactic(5, 2, {0, 1, 1, kNull})};
    CHECK(recovery_rate(planted, near) == 0.5);
    const std::vector<Tactic> far{Tactic(5, 2, {0, kNull, 1, kNull})};
    CHECK(recovery_rate(planted, far) == 0.0);
  }

  TEST_CASE("deterministic reports are reproducible and carry no timings") {
    const auto a = bench_report_to_json(run_benchmark(tiny()));
    const auto b = bench_report_to_json(run_benchmark(tiny()));
    CHECK(a == b);
    CHECK_FALSE(a.contains("hardware"));
    REQUIRE(a["rows"].size() == 2);
    CHECK_FALSE(a["rows"][0].contains("t_i"));
    CHECK(a["rows"][0]["recovery"].is_number());
    CHECK(a["rows"][1]["recovery"] == "n/a");
    auto locals = [](const json& row) {
      return row["locals_applied"].get<int>() + row["locals_without_candidates"].get<int>();
    };
    CHECK(locals(a["rows"][0]) == 30);
    CHECK(locals(a["rows"][1]) == 0);
    CHECK(a["rows"][1]["globals_applied"] == 4);
    const auto text = bench_report_to_text(run_benchmark(tiny()));
    CHECK(text.find("recovery") != std::string::npos);
    CHECK(text.find("t_i") == std::string::npos);
    CHECK(text.find("n/a") != std::string::npos);
  }

  TEST_CASE("timed reports include hardware and timings") {
    auto cfg = tiny();
    cfg.rows.resize(1);
    cfg.deterministic = false;
    const auto r = run_benchmark(cfg);
    const auto j = bench_report_to_json(r);
    CHECK(j.contains("hardware"));
    CHECK(j["rows"][0]["t_i"].get<double>() > 0);
    CHECK(j["rows"][0]["max_t_l"].get<double>() >= j["rows"][0]["avg_t_l"].get<double>());
    CHECK(bench_report_to_text(r).find("avg.t_g") != std::string::npos);
  }

  TEST_CASE("config parsing") {
    const auto cfg = bench_config_from_json(json{{"rows", {{{"n_sequences", 30}, {"n_tactics", 1}}}}, {"seed", 3}});
    CHECK(cfg.rows.size() == 1);
    CHECK(cfg.rows[0].n_sequences == 30);
    CHECK(cfg.seed == 3);
    CHECK_THROWS_AS(bench_config_from_json(json{{"rows", json::array()}}), Error);
    CHECK_THROWS_AS(bench_config_from_json(json::object()), Error);
  }
}
