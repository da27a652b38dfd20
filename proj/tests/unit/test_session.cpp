#include <doctest.h>

#include <memory>

#include "tacmine/error.hpp"
#include "tacmine/session.hpp"
#include "tacmine/synth.hpp"

using namespace tacmine;

namespace {

std::shared_ptr<const Dataset> small_data() {
  SynthParams p;
  p.n_sequences = 80;
  p.sequence_length = 8;
  p.n_tactics = 4;
  p.values_per_feature = 5;
  p.embed_fraction = 0.2;
  p.seed = 17;
  return std::make_shared<const Dataset>(generate(p).dataset);
}

MinerConfig quick() {
  MinerConfig c;
  c.seed = 3;
  c.max_iterations = 40;
  return c;
}

// First local constraint with a candidate, searched over merges of neighbours.
std::optional<AdjustmentDiff> some_local(const Session& s) {
  const auto& ts = s.tactics();
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    auto diff = s.preview(constraint::MergeTactics{{ts[i].id, ts[i + 1].id}});
    if (diff.reason.empty()) return diff;
  }
  for (const auto& t : ts) {
    auto diff = s.preview(constraint::DeleteTactic{{t.id}});
    if (diff.reason.empty()) return diff;
  }
  return std::nullopt;
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

TEST_SUITE("session") {
  TEST_CASE("preview is pure and repeatable") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    REQUIRE(s.tactics().size() >= 2);
    const auto before = s.state();
    const Constraint c = constraint::MergeTactics{{s.tactics()[0].id, s.tactics()[1].id}};
    const auto a = s.preview(c);
    const auto b = s.preview(c);
    CHECK(a == b);
    CHECK(s.state() == before);
    CHECK(s.version() == 0);
    CHECK(a.version == 0);
  }

  TEST_CASE("apply then undo restores the state") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    const auto before = s.state();
    const double score = s.score();
    const auto diff = some_local(s);
    REQUIRE(diff);
    s.apply(*diff);
    CHECK(s.version() == 1);
    CHECK(s.state() == diff->result);
    CHECK(s.history().size() == 1);
    CHECK(s.score() == doctest::Approx(diff->new_score));
    s.undo();
    CHECK(s.version() == 2);
    CHECK(s.state() == before);
    CHECK(s.score() == doctest::Approx(score));
    CHECK(s.history().empty());
    CHECK(code_of([&] { s.undo(); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("stale previews are rejected") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    const auto diff = some_local(s);
    REQUIRE(diff);
    s.set_pinned(s.tactics()[0].id, true);
    CHECK(code_of([&] { s.apply(*diff); }) == ErrorCode::kStaleVersion);
  }

  TEST_CASE("a preview with no candidates cannot be applied") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    const int id = s.tactics()[0].id;
    const auto diff = s.preview(constraint::TrimTactic{id, Direction::kBack, 50});
    CHECK_FALSE(diff.reason.empty());
    CHECK(diff.empty());
    CHECK(code_of([&] { s.apply(diff); }) == ErrorCode::kNoCandidates);
    CHECK(s.version() == 0);
  }

  TEST_CASE("unknown tactics are not found") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    CHECK(code_of([&] { s.preview(constraint::DeleteTactic{{999}}); }) == ErrorCode::kNotFound);
    CHECK(code_of([&] { s.set_pinned(999, true); }) == ErrorCode::kNotFound);
  }

  TEST_CASE("pinned tactics survive a global remine") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    const Tactic keep = s.tactics().back();
    s.set_pinned(keep.id, true);
    const auto diff = s.preview(constraint::LengthRange{2, std::nullopt});
    REQUIRE(diff.reason.empty());
    s.apply(diff);
    const auto& ts = s.tactics();
    const auto it = std::find_if(ts.begin(), ts.end(), [&](const Tactic& t) { return t.id == keep.id; });
    REQUIRE(it != ts.end());
    CHECK(it->same_pattern(keep));
    CHECK(s.params().length_range == LengthRange{2, std::nullopt});
    CHECK(s.state().globals.size() == 1);
  }

  TEST_CASE("global constraints accumulate") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    s.apply(s.preview(constraint::FeatureImportance{0, 0.5}));
    s.apply(s.preview(constraint::FeatureImportance{1, -0.5}));
    CHECK(s.params().importance.at(0) == 0.5);
    CHECK(s.params().importance.at(1) == -0.5);
    s.undo();
    CHECK(s.params().importance.count(1) == 0);
  }

  TEST_CASE("JSON round-trip keeps state, version and history") {
    const auto d = small_data();
    auto s = Session::mine("abc", d, MetricParams{}, quick());
    const auto diff = some_local(s);
    REQUIRE(diff);
    s.apply(*diff);
    s.set_pinned(s.tactics()[0].id, true);
    const auto back = Session::from_json(s.to_json(), d);
    CHECK(back.id() == "abc");
    CHECK(back.version() == s.version());
    CHECK(back.state() == s.state());
    CHECK(back.history() == s.history());
    CHECK(back.miner_config() == s.miner_config());
    CHECK(back.to_json() == s.to_json());
    CHECK_THROWS_AS(Session::from_json(nlohmann::json{{"format", "x"}}, d), Error);
  }

  TEST_CASE("constructor validates tactics") {
    const auto d = small_data();
    std::vector<Tactic> dup{Tactic(1, d->k(), std::vector<ValueId>(d->k(), 0)),
                            Tactic(1, d->k(), std::vector<ValueId>(d->k(), 1))};
    CHECK(code_of([&] { Session("x", d, MetricParams{}, quick(), dup); }) == ErrorCode::kValidation);
    CHECK(code_of([&] { Session("x", nullptr, MetricParams{}, quick(), {}); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("view lists tactics with their usages") {
    auto s = Session::mine("s", small_data(), MetricParams{}, quick());
    const auto v = s.view();
    REQUIRE(v.size() == s.tactics().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(v[i].tactic == s.tactics()[i]);
      CHECK(v[i].stats.freq == v[i].usages.size());
    }
  }
}
