#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/constraints.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

struct ParseContext {
  std::vector<int> tactic_ids;
  // Resolves "this tactic", "selected tactics" and the like.
  std::vector<int> selected;
  // Indexed by feature id.
  std::vector<std::string> feature_names;
  // Length the "longer"/"shorter" templates are relative to.
  std::size_t typical_length = 3;
};

// Median length of `tactics` (3 when empty) and their ids.
ParseContext make_parse_context(const FeatureSchema& schema, std::span<const Tactic> tactics,
                                std::vector<int> selected = {});

struct Template {
  std::string id;
  std::size_t variant = 0;
  std::string pattern;
  // Constraint field -> literal, slot expression or "SLOT|default".
  nlohmann::json bind;
};

struct SlotSpan {
  std::string slot;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct ParsedSuggestion {
  Constraint constraint;
  double confidence = 0;
  std::string raw_text;
  std::string template_id;
  std::vector<SlotSpan> slot_spans;
};

struct TemplateScore {
  std::size_t index = 0;
  double score = 0;
  // All slots the template binds without a default are present in the text.
  bool slots_ok = false;
};

class TemplateBank {
 public:
  static TemplateBank builtin();
  static TemplateBank from_json(const nlohmann::json& j);
  static TemplateBank load(const std::filesystem::path& path);

  const std::vector<Template>& templates() const { return templates_; }
  double threshold() const { return threshold_; }
  int serve_window() const { return serve_window_; }

  // Throws Error{kUnparsed} (detail lists the 3 nearest templates) when no
  // template reaches the threshold, Error{kNotFound} for tactic ids outside
  // the context or an unrecognized feature, Error{kInvalidArgument} for
  // references to an empty selection.
  ParsedSuggestion parse(std::string_view text, const ParseContext& ctx) const;

  // Every template scored against text, best first (ties keep bank order).
  std::vector<TemplateScore> rank(std::string_view text, const ParseContext& ctx) const;

  // The template pattern with its slots filled from ctx.
  std::string example_utterance(const Template& t, const ParseContext& ctx) const;

 private:
  std::vector<Template> templates_;
  std::unordered_map<std::string, std::string> synonyms_;
  std::unordered_set<std::string> stopwords_;
  double threshold_ = 0.6;
  int serve_window_ = 4;
};

}  // namespace tacmine
