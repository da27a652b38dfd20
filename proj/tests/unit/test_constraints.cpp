#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tacmine/constraints.hpp"
#include "tacmine/error.hpp"

using namespace tacmine;
using json = nlohmann::json;

namespace {

std::vector<Constraint> one_of_each() {
  return {constraint::IndexRange{2, 5},
          constraint::LengthRange{2, std::nullopt},
          constraint::FeatureImportance{1, -0.5},
          constraint::SplitByFeature{{1, 2}, 0},
          constraint::SpecifyFeature{{2}, {0, 2}},
          constraint::MergeTactics{{1, 2, 3}},
          constraint::ExpandTactic{3, Direction::kFront, 2},
          constraint::TrimTactic{1, Direction::kBack, 1},
          constraint::DeleteTactic{{2}}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("constraints") {
  TEST_CASE("every variant round-trips through JSON") {
    const auto s = oracle::schema(3, 3);
    const auto all = one_of_each();
    REQUIRE(all.size() == kConstraintVariantCount);
    for (const auto& c : all) {
      const auto j = constraint_to_json(c, s);
      CHECK(j["type"] == std::string(variant_name(c)));
      CHECK(constraint_from_json(j, s) == c);
      CHECK_FALSE(describe(c, s).empty());
      CHECK(variant_index(variant_name(c)) == c.index());
    }
  }

  TEST_CASE("global and local split") {
    const auto all = one_of_each();
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(is_global(all[i]) == (i < 3));
    CHECK(referenced_tactics(all[6]) == std::vector<int>{3});
    CHECK(referenced_tactics(all[5]) == std::vector<int>{1, 2, 3});
    CHECK(referenced_tactics(all[0]).empty());
  }

  TEST_CASE("features may be given by name or index") {
    const auto s = oracle::schema(3, 3);
    const auto a = constraint_from_json(json{{"type", "SplitByFeature"}, {"tactics", 4}, {"feature", "f2"}}, s);
    const auto b = constraint_from_json(json{{"type", "SplitByFeature"}, {"tactics", {4}}, {"feature", 2}}, s);
    CHECK(a == b);
  }

  TEST_CASE("malformed JSON is a validation error") {
    const auto s = oracle::schema(2, 2);
    CHECK(code_of([&] { constraint_from_json(json{{"type", "Nope"}}, s); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { constraint_from_json(json{{"lo", 1}}, s); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { constraint_from_json(json{{"type", "IndexRange"}, {"lo", 1}}, s); }) == ErrorCode::kValidation);
    CHECK(code_of([&] {
            constraint_from_json(json{{"type", "FeatureImportance"}, {"feature", "zz"}, {"value", 1}}, s);
          }) == ErrorCode::kValidation);
    CHECK(code_of([&] {
            constraint_from_json(json{{"type", "ExpandTactic"}, {"tactic", 1}, {"direction", "up"}}, s);
          }) == ErrorCode::kValidation);
  }

  TEST_CASE("validation against the current set") {
    const auto s = oracle::schema(2, 2);
    const std::vector<Tactic> cur{Tactic(1, 2, {0, 1}), Tactic(2, 2, {1, 1})};
    CHECK_NOTHROW(validate_constraint(constraint::MergeTactics{{1, 2}}, s, cur));
    CHECK(code_of([&] { validate_constraint(constraint::MergeTactics{{1, 9}}, s, cur); }) == ErrorCode::kNotFound);
    CHECK(code_of([&] { validate_constraint(constraint::MergeTactics{{1}}, s, cur); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { validate_constraint(constraint::MergeTactics{{1, 1}}, s, cur); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { validate_constraint(constraint::IndexRange{3, 2}, s, cur); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { validate_constraint(constraint::FeatureImportance{0, 2}, s, cur); }) ==
          ErrorCode::kValidation);
    CHECK(code_of([&] { validate_constraint(constraint::SplitByFeature{{1}, 5}, s, cur); }) ==
          ErrorCode::kValidation);
    CHECK(code_of([&] { validate_constraint(constraint::ExpandTactic{1, Direction::kBack, 0}, s, cur); }) ==
          ErrorCode::kValidation);
  }

  TEST_CASE("compile_global folds constraints into metric parameters") {
    const std::vector<Constraint> cs{constraint::IndexRange{1, 3}, constraint::FeatureImportance{0, 0.5},
                                     constraint::LengthRange{2, 4}, constraint::FeatureImportance{0, -0.25}};
    MetricParams base;
    base.alpha = 0.7;
    const auto p = compile_global(cs, base);
    CHECK(p.alpha == 0.7);
    CHECK(p.index_range == IndexRange{1, 3});
    CHECK(p.length_range == LengthRange{2, 4});
    CHECK(p.importance.at(0) == -0.25);
    CHECK(p.importance_of(1) == 0);

    const std::vector<Constraint> conflict{constraint::IndexRange{1, 3}, constraint::IndexRange{2, 3}};
    CHECK(code_of([&] { compile_global(conflict); }) == ErrorCode::kValidation);
    const std::vector<Constraint> local{constraint::DeleteTactic{{1}}};
    CHECK_THROWS_AS(compile_global(local), Error);
  }

  TEST_CASE("remine keeps the pinned tactics and numbers new ones above first_id") {
    std::mt19937_64 rng(31);
    const auto d = oracle::random_dataset(rng, 20, 3, 8, 2, 3);
    const Tactic keep = oracle::random_tactic(rng, d, 2, 0.9, 4);
    MinerConfig cfg;
    cfg.max_iterations = 30;
    const auto r = remine(d, MetricParams{}, cfg, std::vector<Tactic>{keep}, 10);
    REQUIRE(r.find(4));
    CHECK(r.find(4)->pinned);
    CHECK(r.find(4)->same_pattern(keep));
    for (const auto& t : r.tactics)
      if (t.id != 4) CHECK(t.id >= 10);
  }
}
