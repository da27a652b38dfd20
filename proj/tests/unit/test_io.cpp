#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tacmine/error.hpp"
#include "tacmine/io.hpp"

using namespace tacmine;
using json = nlohmann::json;

namespace {

json small_dataset() {
  return json::parse(R"({
    "format": "tacmine.dataset", "version": 1,
    "schema": [{"name": "pos", "values": ["L", "R"]}, {"name": "tech", "values": ["push", "loop", "flick"]}],
    "focal_player": 0,
    "rallies": [
      {"id": 10, "server": 0, "winner": 1, "events": [["L", "push"], ["R", "loop"]]},
      {"id": 11, "server": 1, "winner": 1, "events": [["R", "flick"]]}
    ]})");
}

ErrorCode code_of(const json& j) {
  try {
    validate_dataset(j);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

std::string message_of(const json& j) {
  try {
    validate_dataset(j);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("dataset parses and round-trips") {
    const auto d = validate_dataset(small_dataset());
    CHECK(d.rallies.size() == 2);
    CHECK(d.rallies[0].at(1, 1) == 1);
    CHECK(d.rallies[1].winner == 1);
    CHECK(validate_dataset(dataset_to_json(d)) == d);
  }

  TEST_CASE("random datasets round-trip") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const auto d = oracle::random_dataset(rng, 5, 1, 6, 3, 4);
      CHECK(validate_dataset(dataset_to_json(d)) == d);
    }
  }

  TEST_CASE("validation errors name the offending rally") {
    auto j = small_dataset();
    j["rallies"][1]["events"][0][1] = "smash";
    CHECK(code_of(j) == ErrorCode::kValidation);
    CHECK(message_of(j).find("rally 11") != std::string::npos);

    j = small_dataset();
    j["rallies"][0]["events"][1] = json::array({"L"});
    CHECK(code_of(j) == ErrorCode::kValidation);
    CHECK(message_of(j).find("rally 10") != std::string::npos);

    j = small_dataset();
    j["rallies"][1]["id"] = 10;
    CHECK(code_of(j) == ErrorCode::kValidation);

    j = small_dataset();
    j["rallies"][0]["winner"] = 2;
    CHECK(code_of(j) == ErrorCode::kValidation);

    j = small_dataset();
    j["rallies"][0]["events"] = json::array();
    CHECK(code_of(j) == ErrorCode::kValidation);

    j = small_dataset();
    j["rallies"] = json::array();
    CHECK(code_of(j) == ErrorCode::kValidation);

    j = small_dataset();
    j["format"] = "other";
    CHECK(code_of(j) == ErrorCode::kValidation);

    j = small_dataset();
    j["schema"][1]["values"] = json::array({"push"});
    CHECK(code_of(j) == ErrorCode::kValidation);
  }

  TEST_CASE("tactics round-trip and reject duplicates") {
    const auto d = validate_dataset(small_dataset());
    std::vector<Tactic> ts{Tactic(1, 2, {0, kNull, kNull, 1}, true), Tactic(2, 2, {1, 2})};
    const auto j = tactics_to_json(ts, d.schema);
    CHECK(j[0]["events"][0][1].is_null());
    CHECK(j[0]["events"][1][1] == "loop");
    CHECK(tactics_from_json(j, d.schema) == ts);

    ts[1].id = 1;
    CHECK_THROWS_AS(tactics_from_json(tactics_to_json(ts, d.schema), d.schema), Error);
  }

  TEST_CASE("metric params and miner config round-trip") {
    const auto d = validate_dataset(small_dataset());
    MetricParams p;
    p.alpha = 0.5;
    p.beta = 2;
    p.index_range = IndexRange{2, 4};
    p.length_range = LengthRange{2, 3};
    p.importance[1] = -0.75;
    CHECK(metric_params_from_json(metric_params_to_json(p, d.schema), d.schema) == p);

    MinerConfig m;
    m.seed = 99;
    m.patience = 4;
    m.max_tactic_length = 5;
    CHECK(miner_config_from_json(miner_config_to_json(m)) == m);
  }

  TEST_CASE("files round-trip") {
    const auto dir = std::filesystem::temp_directory_path() / "tacmine_io_test";
    std::filesystem::remove_all(dir);
    const auto d = validate_dataset(small_dataset());
    save_dataset(d, dir / "nested" / "d.json");
    CHECK(load_dataset(dir / "nested" / "d.json") == d);
    write_text_file(dir / "t.txt", "hello");
    CHECK(read_text_file(dir / "t.txt") == "hello");
    CHECK_THROWS_AS(load_dataset(dir / "missing.json"), Error);
    write_text_file(dir / "bad.json", "{");
    CHECK_THROWS_AS(read_json_file(dir / "bad.json"), Error);
    std::filesystem::remove_all(dir);
  }
}
