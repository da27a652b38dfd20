#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tacmine/constraints.hpp"
#include "tacmine/error.hpp"

using namespace tacmine;

namespace {

// Two features, three values; rallies chosen so tactic shapes below occur.
Dataset fixture() {
  Dataset d;
  d.schema = oracle::schema(2, 3);
  d.focal_player = 0;
  const std::vector<std::vector<ValueId>> rows{
      {0, 0, 1, 1, 2, 2}, {0, 1, 1, 1, 2, 0}, {0, 0, 1, 2, 2, 2}, {1, 0, 0, 0, 1, 1}, {0, 2, 1, 1, 0, 0}, {2, 2, 0, 1, 1, 1},
  };
  int id = 0;
  for (const auto& r : rows) {
    ++id;
    d.rallies.push_back({id, 2, r, id % 2, 0});
  }
  return d;
}

}  // namespace

TEST_SUITE("fine_tune") {
  TEST_CASE("apply_modifications edits, pads and strips") {
    const Tactic t(1, 2, {0, kNull, 1, 1});
    CHECK(apply_modifications(t, std::vector<Modification>{{ModAction::kAdd, 0, 1, 2}}).slots ==
          std::vector<ValueId>{0, 2, 1, 1});
    CHECK(apply_modifications(t, std::vector<Modification>{{ModAction::kReplace, 1, 0, 2}}).slots ==
          std::vector<ValueId>{0, kNull, 2, 1});
    CHECK(apply_modifications(t, std::vector<Modification>{{ModAction::kRemove, 0, 0, kNull}}).slots ==
          std::vector<ValueId>{1, 1});
    const auto padded = apply_modifications(t, std::vector<Modification>{{ModAction::kAdd, -1, 0, 2}});
    CHECK(padded.slots == std::vector<ValueId>{2, kNull, 0, kNull, 1, 1});
    CHECK(apply_modifications(t, std::vector<Modification>{{ModAction::kAdd, 3, 1, 0}}).length() == 4);
    CHECK_THROWS_AS(apply_modifications(t, std::vector<Modification>{{ModAction::kAdd, 0, 0, 1}}), Error);
    CHECK_THROWS_AS(apply_modifications(t, std::vector<Modification>{{ModAction::kRemove, 0, 1, kNull}}), Error);
    CHECK_THROWS_AS(apply_modifications(t, std::vector<Modification>{{ModAction::kReplace, 0, 0, 0}}), Error);
  }

  TEST_CASE("super tactic keeps the shared values") {
    const Tactic a(1, 2, {0, 0, 1, 1}), b(2, 2, {0, 2, 1, 1});
    const auto s = super_tactic(std::vector<Tactic>{a, b});
    REQUIRE(s);
    CHECK(s->slots == std::vector<ValueId>{0, kNull, 1, 1});
    CHECK(super_tactic(std::vector<Tactic>{a, a})->same_pattern(a));
    CHECK_FALSE(super_tactic(std::vector<Tactic>{a, Tactic(3, 2, {2, 2})}));
    CHECK(merge_offset(a, b) == 0);
    CHECK(merge_offset(a, Tactic(3, 2, {1, 1})) == 1);
  }

  TEST_CASE("every candidate satisfies its constraint and occurs") {
    const auto d = fixture();
    const std::vector<Tactic> cur{Tactic(1, 2, {0, kNull, 1, kNull}), Tactic(2, 2, {kNull, 0, 1, kNull}),
                                  Tactic(3, 2, {1, 1, 2, kNull})};
    const std::vector<Constraint> cs{constraint::SplitByFeature{{1}, 1},    constraint::SpecifyFeature{{1}, {1}},
                                     constraint::MergeTactics{{1, 2}},      constraint::ExpandTactic{1, Direction::kBack, 1},
                                     constraint::ExpandTactic{3, Direction::kFront, 1},
                                     constraint::TrimTactic{3, Direction::kBack, 1}};
    for (const auto& c : cs) {
      CAPTURE(describe(c, d.schema));
      const auto r = generate_fine_tuning(c, cur, d, 100);
      CHECK(r.reason.empty());
      REQUIRE_FALSE(r.candidates.empty());
      std::vector<Tactic> adjusted;
      for (int id : r.adjusted)
        for (const auto& t : cur)
          if (t.id == id) adjusted.push_back(t);
      int id = 100;
      for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        const auto& cand = r.candidates[i];
        CHECK(cand.id == id++);
        CHECK(oracle::occurs(cand, d));
        CHECK(satisfies_local(c, adjusted, cand));
        CHECK(static_cast<int>(r.modifications[i].size()) == r.depth);
      }
    }
  }

  TEST_CASE("modification paths reproduce the candidates") {
    const auto d = fixture();
    const std::vector<Tactic> cur{Tactic(1, 2, {0, kNull, 1, kNull}), Tactic(2, 2, {kNull, 0, 1, kNull})};
    const std::vector<Constraint> cs{constraint::SpecifyFeature{{1}, {1}}, constraint::MergeTactics{{1, 2}}};
    for (const auto& c : cs) {
      const auto r = generate_fine_tuning(c, cur, d);
      for (std::size_t i = 0; i < r.candidates.size(); ++i)
        CHECK(oracle::strip(apply_modifications(cur[0], r.modifications[i])).same_pattern(r.candidates[i]));
    }
  }

  TEST_CASE("impossible requests carry a reason") {
    const auto d = fixture();
    const std::vector<Tactic> cur{Tactic(1, 2, {0, 0}), Tactic(2, 2, {2, 2})};
    auto r = generate_fine_tuning(constraint::TrimTactic{1, Direction::kBack, 1}, cur, d);
    CHECK(r.candidates.empty());
    CHECK_FALSE(r.reason.empty());
    r = generate_fine_tuning(constraint::MergeTactics{{1, 2}}, cur, d);
    CHECK(r.candidates.empty());
    CHECK_FALSE(r.reason.empty());
    r = generate_fine_tuning(constraint::SplitByFeature{{1}, 0}, cur, d);
    CHECK(r.candidates.empty());
    CHECK_FALSE(r.reason.empty());
    CHECK_THROWS_AS(generate_fine_tuning(constraint::IndexRange{1, 2}, cur, d), Error);
  }

  TEST_CASE("delete skips the guarantee and the optimizer drops the tactic") {
    const auto d = fixture();
    const std::vector<Tactic> cur{Tactic(1, 2, {0, kNull, 1, kNull}), Tactic(2, 2, {2, 2})};
    const auto r = generate_fine_tuning(constraint::DeleteTactic{{1}}, cur, d);
    CHECK(r.skip_guarantee);
    CHECK(r.candidates.empty());
    const auto out = fine_tune_optimize(d, cur, r.adjusted, r.candidates, MetricParams{}, false);
    CHECK(std::none_of(out.begin(), out.end(), [](const Tactic& t) { return t.id == 1; }));
  }

  TEST_CASE("the guarantee admits at least one candidate") {
    const auto d = fixture();
    const std::vector<Tactic> cur{Tactic(1, 2, {0, kNull, 1, kNull}), Tactic(2, 2, {kNull, 0, 1, kNull})};
    const std::vector<int> adjusted{1};
    const std::vector<Tactic> cands{Tactic(50, 2, {2, 2, 0, 1})};
    const auto out = fine_tune_optimize(d, cur, adjusted, cands, MetricParams{}, true);
    CHECK(std::any_of(out.begin(), out.end(), [](const Tactic& t) { return t.id == 50; }));
    CHECK(std::none_of(out.begin(), out.end(), [](const Tactic& t) { return t.id == 1; }));
  }

  TEST_CASE("candidate order prefers frequent then concrete") {
    const auto d = fixture();
    const std::vector<Tactic> cands{Tactic(1, 2, {2, 2, 0, 1}), Tactic(2, 2, {0, kNull}), Tactic(3, 2, {0, 0})};
    CHECK(candidate_order(d, cands) == std::vector<std::size_t>{1, 2, 0});
  }
}
