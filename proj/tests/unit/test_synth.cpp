#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "tacmine/constraints.hpp"
#include "tacmine/error.hpp"
#include "tacmine/io.hpp"
#include "tacmine/synth.hpp"

using namespace tacmine;

namespace {

SynthParams small(std::uint64_t seed) {
  SynthParams p;
  p.n_sequences = 200;
  p.n_tactics = 6;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("generation is deterministic per seed") {
    const auto a = generate(small(1));
    const auto b = generate(small(1));
    CHECK(a.dataset == b.dataset);
    CHECK(a.planted == b.planted);
    CHECK(a.embeddings == b.embeddings);
    CHECK_FALSE(generate(small(2)).dataset == a.dataset);
  }

  TEST_CASE("planted tactics have the requested shape and are embedded") {
    const auto p = small(3);
    const auto r = generate(p);
    CHECK(r.dataset.rallies.size() == p.n_sequences);
    for (const auto& rally : r.dataset.rallies) CHECK(rally.length() == p.sequence_length);
    REQUIRE(r.planted.size() == p.n_tactics);
    REQUIRE(r.embeddings.size() == p.n_tactics);
    for (std::size_t i = 0; i < r.planted.size(); ++i) {
      const auto& t = r.planted[i];
      CHECK(t.length() == p.tactic_length);
      CHECK(t.non_null_count() == p.tactic_nonnull);
      CHECK(t.well_formed());
      CHECK(r.selected[i] == 20);
      CHECK(r.embeddings[i].size() <= r.selected[i]);
      CHECK(r.embeddings[i].size() >= r.selected[i] / 2);
      std::set<int> rallies;
      for (const auto& u : r.embeddings[i]) {
        const auto idx = r.dataset.rally_index(u.rally_id);
        REQUIRE(idx);
        CHECK(oracle::matches(t, r.dataset.rallies[*idx], u.start));
        rallies.insert(u.rally_id);
      }
      CHECK(rallies.size() == r.embeddings[i].size());
    }
    for (std::size_t i = 0; i < r.planted.size(); ++i)
      for (std::size_t j = i + 1; j < r.planted.size(); ++j) CHECK_FALSE(r.planted[i].same_pattern(r.planted[j]));
    CHECK(validate_dataset(dataset_to_json(r.dataset)) == r.dataset);
  }

  TEST_CASE("no planted tactics") {
    auto p = small(4);
    p.n_tactics = 0;
    const auto r = generate(p);
    CHECK(r.planted.empty());
    CHECK(r.dataset.rallies.size() == p.n_sequences);
  }

  TEST_CASE("parameter validation") {
    auto p = small(5);
    p.tactic_nonnull = p.tactic_length * p.n_features + 1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = small(5);
    p.tactic_length = p.sequence_length + 1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = small(5);
    p.embed_fraction = 1.5;
    CHECK_THROWS_AS(p.validate(), Error);
    p = small(5);
    CHECK(synth_params_from_json(synth_params_to_json(p)) == p);
  }

  TEST_CASE("constraint suite") {
    const auto r = generate(small(6));
    const auto cs = generate_constraint_suite(r, 9);
    std::vector<std::size_t> count(kConstraintVariantCount, 0);
    for (const auto& c : cs) {
      ++count[c.index()];
      CHECK_NOTHROW(validate_constraint(c, r.dataset.schema, r.planted));
    }
    CHECK(count[0] + count[1] + count[2] == 4);
    for (std::size_t v = 3; v < kConstraintVariantCount; ++v) CHECK(count[v] == 5);
    CHECK(generate_constraint_suite(r, 9) == cs);
  }
}
