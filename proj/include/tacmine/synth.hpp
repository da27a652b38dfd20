#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/constraints.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

struct SynthParams {
  std::size_t n_sequences = 500;
  std::size_t sequence_length = 10;
  std::size_t n_features = 3;
  std::size_t n_tactics = 25;
  std::size_t values_per_feature = 10;
  double embed_fraction = 0.10;
  std::size_t tactic_length = 3;
  std::size_t tactic_nonnull = 7;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const SynthParams&) const = default;
};

nlohmann::json synth_params_to_json(const SynthParams& p);
SynthParams synth_params_from_json(const nlohmann::json& j);

struct SynthResult {
  Dataset dataset;
  // Planted tactics carry ids 1..n_tactics.
  std::vector<Tactic> planted;
  // Per planted tactic: the windows it was written into that still match
  // after all embeddings are done.
  std::vector<std::vector<Usage>> embeddings;
  // Per planted tactic: number of sequences it was written into.
  std::vector<std::size_t> selected;
};

// Random sequences with random planted tactics written into a fraction of
// them. Windows are placed where they do not overlap earlier embeddings when
// such a window exists; otherwise later embeddings overwrite earlier ones.
SynthResult generate(const SynthParams& p);

nlohmann::json ground_truth_to_json(const SynthResult& r);

// One constraint per global knob (index range, length range, one positive and
// one negative feature importance) followed by five of each local variant
// targeting random planted tactics.
std::vector<Constraint> generate_constraint_suite(const SynthResult& r, std::uint64_t seed);

}  // namespace tacmine
