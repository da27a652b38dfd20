#include <doctest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "tacmine/miner.hpp"

using namespace tacmine;

TEST_SUITE("miner") {
  TEST_CASE("combine overlays and concatenates") {
    const Tactic a(1, 2, {0, kNull, 1, 1});
    const Tactic b(2, 2, {kNull, 2});
    auto c = combine(a, b, 0);
    REQUIRE(c);
    CHECK(c->slots == std::vector<ValueId>{0, 2, 1, 1});
    c = combine(a, b, 3);
    REQUIRE(c);
    CHECK(c->length() == 4);
    CHECK(c->at(2, 0) == kNull);
    CHECK(c->at(3, 1) == 2);
    c = combine(a, b, -1);
    REQUIRE(c);
    CHECK(c->slots == std::vector<ValueId>{kNull, 2, 0, kNull, 1, 1});
    CHECK_FALSE(combine(a, Tactic(3, 2, {kNull, 0}), 1));
    CHECK_FALSE(combine(a, Tactic(3, 1, {0}), 0));
  }

  TEST_CASE("single value seeds cover each present value once") {
    std::mt19937_64 rng(21);
    const auto d = oracle::random_dataset(rng, 5, 2, 5, 3, 6);
    const auto seeds = single_value_seeds(d);
    std::set<std::pair<std::size_t, ValueId>> present, seen;
    for (const auto& r : d.rallies)
      for (std::size_t i = 0; i < r.values.size(); ++i) present.insert({i % r.k, r.values[i]});
    for (const auto& s : seeds) {
      CHECK(s.length() == 1);
      CHECK(s.non_null_count() == 1);
      CHECK(oracle::occurs(s, d));
      for (std::size_t f = 0; f < s.k; ++f)
        if (s.slots[f] != kNull) CHECK(seen.insert({f, s.slots[f]}).second);
    }
    CHECK(seen == present);
  }

  TEST_CASE("mining is deterministic and lowers the description length") {
    std::mt19937_64 rng(22);
    const auto d = oracle::random_dataset(rng, 30, 4, 8, 2, 3);
    MinerConfig cfg;
    cfg.seed = 5;
    cfg.max_iterations = 60;
    const MetricParams p;
    const auto a = mine_initial(d, p, cfg);
    const auto b = mine_initial(d, p, cfg);
    CHECK(a == b);
    CHECK(description_length(d, a.tactics, p) <= description_length(d, std::vector<Tactic>{}, p));
    std::set<int> ids;
    for (const auto& t : a.tactics) {
      CHECK(t.well_formed());
      CHECK(oracle::occurs(t, d));
      CHECK(ids.insert(t.id).second);
    }
    for (std::size_t i = 0; i < a.tactics.size(); ++i)
      for (std::size_t j = i + 1; j < a.tactics.size(); ++j) CHECK_FALSE(a.tactics[i].same_pattern(a.tactics[j]));
  }

  TEST_CASE("optimize never increases the description length") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const auto d = oracle::random_dataset(rng, 10, 3, 8, 2, 3);
      CoverState st(d, MetricParams{});
      std::vector<Tactic> cands;
      for (int i = 0; i < 8; ++i) cands.push_back(oracle::random_tactic(rng, d, 3, 0.8, i + 1));
      const double before = st.description_length();
      optimize(st, cands);
      CHECK(st.description_length() <= before + kDlTolerance);
    }
  }

  TEST_CASE("sweep leaves only members whose removal would cost") {
    std::mt19937_64 rng(24);
    const auto d = oracle::random_dataset(rng, 10, 3, 8, 2, 3);
    CoverState st(d, MetricParams{});
    for (int i = 0; i < 10; ++i) st.add(oracle::random_tactic(rng, d, 3, 0.5, i + 1));
    Tactic pinned = oracle::random_tactic(rng, d, 1, 0.1, 100);
    pinned.pinned = true;
    st.add(pinned);
    sweep(st);
    CHECK(st.position_of(100));
    for (std::size_t i = 0; i < st.size(); ++i)
      if (!st.tactic(i).pinned) CHECK(st.delta_remove(i) > kDlTolerance);
  }

  TEST_CASE("initial tactics are kept when pinned") {
    std::mt19937_64 rng(25);
    const auto d = oracle::random_dataset(rng, 20, 3, 8, 2, 3);
    Tactic keep(7, 2, {0, 0, 0, 0, 0, 0, 0, 0}, true);
    MinerConfig cfg;
    cfg.max_iterations = 20;
    const auto r = mine_initial(d, MetricParams{}, cfg, std::vector<Tactic>{keep}, 8);
    REQUIRE(r.find(7));
    CHECK(r.find(7)->same_pattern(keep));
    for (const auto& t : r.tactics)
      if (t.id != 7) CHECK(t.id >= 8);
  }

  TEST_CASE("config validation") {
    MinerConfig c;
    c.patience = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.max_tactic_length = 0;
    CHECK_THROWS(c.validate());
  }
}
