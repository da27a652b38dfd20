#include "tacmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tacmine/error.hpp"
#include "tacmine/io.hpp"

namespace tacmine {

void SynthParams::validate() const {
  auto reject = [](const std::string& msg) { throw Error(ErrorCode::kValidation, "synth: " + msg); };
  if (n_sequences < 1) reject("n_sequences must be >= 1");
  if (sequence_length < 1) reject("sequence_length must be >= 1");
  if (n_features < 1) reject("n_features must be >= 1");
  if (values_per_feature < 2) reject("values_per_feature must be >= 2");
  if (!(embed_fraction > 0.0 && embed_fraction <= 1.0)) reject("embed_fraction must lie in (0, 1]");
  if (n_tactics > 0) {
    if (tactic_length < 1) reject("tactic_length must be >= 1");
    if (tactic_length > sequence_length) reject("tactic_length exceeds sequence_length");
    if (tactic_nonnull > tactic_length * n_features) reject("tactic_nonnull exceeds tactic_length * n_features");
    if (tactic_nonnull < (tactic_length > 1 ? 2u : 1u)) reject("tactic_nonnull too small to fill both boundary hits");
  }
}

nlohmann::json synth_params_to_json(const SynthParams& p) {
  return {{"n_sequences", p.n_sequences},       {"sequence_length", p.sequence_length},
          {"n_features", p.n_features},         {"n_tactics", p.n_tactics},
          {"values_per_feature", p.values_per_feature}, {"embed_fraction", p.embed_fraction},
          {"tactic_length", p.tactic_length},   {"tactic_nonnull", p.tactic_nonnull},
          {"seed", p.seed}};
}

SynthParams synth_params_from_json(const nlohmann::json& j) {
  SynthParams p;
  try {
    p.n_sequences = j.value("n_sequences", p.n_sequences);
    p.sequence_length = j.value("sequence_length", p.sequence_length);
    p.n_features = j.value("n_features", p.n_features);
    p.n_tactics = j.value("n_tactics", p.n_tactics);
    p.values_per_feature = j.value("values_per_feature", p.values_per_feature);
    p.embed_fraction = j.value("embed_fraction", p.embed_fraction);
    p.tactic_length = j.value("tactic_length", p.tactic_length);
    p.tactic_nonnull = j.value("tactic_nonnull", p.tactic_nonnull);
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("synth: ") + e.what());
  }
  p.validate();
  return p;
}

SynthResult generate(const SynthParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  const std::size_t k = p.n_features;
  const std::size_t len = p.sequence_length;

  std::vector<Feature> features;
  for (std::size_t f = 0; f < k; ++f) {
    Feature feature{"f" + std::to_string(f), {}};
    for (std::size_t v = 0; v < p.values_per_feature; ++v) feature.values.push_back("v" + std::to_string(v));
    features.push_back(std::move(feature));
  }
  SynthResult out;
  out.dataset.schema = FeatureSchema(std::move(features));
  out.dataset.focal_player = 0;

  std::uniform_int_distribution<int> value(0, static_cast<int>(p.values_per_feature) - 1);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t i = 0; i < p.n_sequences; ++i) {
    Rally r;
    r.id = static_cast<int>(i) + 1;
    r.k = k;
    r.values.resize(len * k);
    for (auto& v : r.values) v = static_cast<ValueId>(value(rng));
    r.server = coin(rng);
    r.winner = coin(rng);
    out.dataset.rallies.push_back(std::move(r));
  }

  // Random tactics: tactic_nonnull concrete slots with both boundary hits filled.
  std::vector<std::size_t> positions(p.tactic_length * k);
  std::iota(positions.begin(), positions.end(), 0);
  while (out.planted.size() < p.n_tactics) {
    std::shuffle(positions.begin(), positions.end(), rng);
    Tactic t(static_cast<int>(out.planted.size()) + 1, k, std::vector<ValueId>(p.tactic_length * k, kNull));
    for (std::size_t i = 0; i < p.tactic_nonnull; ++i) t.slots[positions[i]] = static_cast<ValueId>(value(rng));
    if (!t.well_formed()) continue;
    const bool duplicate = std::any_of(out.planted.begin(), out.planted.end(), [&](const Tactic& o) { return o.same_pattern(t); });
    if (!duplicate) out.planted.push_back(std::move(t));
  }

  // Embed each tactic into ceil(fraction * n) distinct sequences.
  const auto per_tactic = std::min<std::size_t>(
      p.n_sequences, static_cast<std::size_t>(std::ceil(p.embed_fraction * static_cast<double>(p.n_sequences) - 1e-9)));
  std::vector<std::vector<char>> occupied(p.n_sequences, std::vector<char>(len, 0));
  std::vector<int> last_tactic(p.n_sequences, -1);
  std::vector<std::size_t> order(p.n_sequences);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<std::pair<std::size_t, int>>> log(out.planted.size());
  const int windows = static_cast<int>(len - p.tactic_length) + 1;
  for (std::size_t ti = 0; ti < out.planted.size() && windows > 0; ++ti) {
    const Tactic& t = out.planted[ti];
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < per_tactic; ++s) {
      const std::size_t ri = order[s];
      std::vector<int> free_starts;
      for (int st = 1; st <= windows; ++st) {
        bool free = true;
        for (std::size_t h = 0; h < p.tactic_length && free; ++h) free = !occupied[ri][static_cast<std::size_t>(st - 1) + h];
        if (free) free_starts.push_back(st);
      }
      const int start = free_starts.empty()
                            ? std::uniform_int_distribution<int>(1, windows)(rng)
                            : free_starts[std::uniform_int_distribution<std::size_t>(0, free_starts.size() - 1)(rng)];
      Rally& r = out.dataset.rallies[ri];
      for (std::size_t e = 0; e < t.length(); ++e) {
        occupied[ri][static_cast<std::size_t>(start - 1) + e] = 1;
        for (std::size_t f = 0; f < k; ++f)
          if (t.at(e, f) != kNull) r.values[(static_cast<std::size_t>(start - 1) + e) * k + f] = t.at(e, f);
      }
      log[ti].emplace_back(ri, start);
      last_tactic[ri] = static_cast<int>(ti);
    }
  }
  out.selected.assign(out.planted.size(), windows > 0 ? per_tactic : 0);

  // Outcome bias: rallies carrying planted tactic i are won by the focal
  // player with probability 0.5 +/- 0.4, alternating in sign with i.
  for (std::size_t ri = 0; ri < p.n_sequences; ++ri) {
    if (last_tactic[ri] < 0) continue;
    const double p_win = last_tactic[ri] % 2 == 0 ? 0.9 : 0.1;
    out.dataset.rallies[ri].winner = std::bernoulli_distribution(p_win)(rng) ? out.dataset.focal_player
                                                                             : 1 - out.dataset.focal_player;
  }

  out.embeddings.resize(out.planted.size());
  for (std::size_t ti = 0; ti < out.planted.size(); ++ti) {
    for (const auto& [ri, start] : log[ti])
      if (match_at(out.planted[ti], out.dataset.rallies[ri], start))
        out.embeddings[ti].push_back({out.dataset.rallies[ri].id, start});
    std::sort(out.embeddings[ti].begin(), out.embeddings[ti].end());
  }
  return out;
}

nlohmann::json ground_truth_to_json(const SynthResult& r) {
  nlohmann::json embeddings = nlohmann::json::array();
  for (const auto& list : r.embeddings) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& u : list) items.push_back({{"rally_id", u.rally_id}, {"start", u.start}});
    embeddings.push_back(std::move(items));
  }
  return {{"format", "tacmine.ground_truth"},
          {"version", kFormatVersion},
          {"planted", tactics_to_json(r.planted, r.dataset.schema)},
          {"selected", r.selected},
          {"embeddings", std::move(embeddings)}};
}

std::vector<Constraint> generate_constraint_suite(const SynthResult& r, std::uint64_t seed) {
  std::vector<Constraint> out;
  const std::size_t k = r.dataset.k();
  int max_start = 1;
  std::size_t max_len = 1;
  for (const auto& list : r.embeddings)
    for (const auto& u : list) max_start = std::max(max_start, u.start);
  for (const auto& t : r.planted) max_len = std::max(max_len, t.length());

  out.push_back(constraint::IndexRange{1, max_start});
  out.push_back(constraint::LengthRange{std::max<std::size_t>(1, max_len - 1), max_len + 1});
  out.push_back(constraint::FeatureImportance{0, 0.5});
  out.push_back(constraint::FeatureImportance{k > 1 ? 1u : 0u, -0.5});
  if (r.planted.empty()) return out;

  std::mt19937_64 rng(seed);
  auto pick = [&]() { return r.planted[std::uniform_int_distribution<std::size_t>(0, r.planted.size() - 1)(rng)]; };
  auto pick_null_feature = [&](const Tactic& t) {
    std::vector<std::size_t> fs;
    for (std::size_t f = 0; f < k; ++f)
      if (t.non_null_count(f) < t.length()) fs.push_back(f);
    if (fs.empty()) return std::size_t{0};
    return fs[std::uniform_int_distribution<std::size_t>(0, fs.size() - 1)(rng)];
  };
  auto direction = [&]() { return std::uniform_int_distribution<int>(0, 1)(rng) ? Direction::kBack : Direction::kFront; };

  for (int i = 0; i < 5; ++i) {
    const Tactic t = pick();
    out.push_back(constraint::SplitByFeature{{t.id}, pick_null_feature(t)});
  }
  for (int i = 0; i < 5; ++i) {
    const Tactic t = pick();
    out.push_back(constraint::SpecifyFeature{{t.id}, {pick_null_feature(t)}});
  }
  for (int i = 0; i < 5; ++i) {
    const Tactic a = pick();
    Tactic b = pick();
    for (int guard = 0; b.id == a.id && r.planted.size() > 1 && guard < 100; ++guard) b = pick();
    out.push_back(constraint::MergeTactics{{a.id, b.id}});
  }
  for (int i = 0; i < 5; ++i) out.push_back(constraint::ExpandTactic{pick().id, direction(), 1});
  for (int i = 0; i < 5; ++i) out.push_back(constraint::TrimTactic{pick().id, direction(), 1});
  for (int i = 0; i < 5; ++i) out.push_back(constraint::DeleteTactic{{pick().id}});
  return out;
}

}  // namespace tacmine
