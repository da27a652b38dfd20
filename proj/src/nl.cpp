#include "tacmine/nl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

#include "tacmine/error.hpp"
#include "tacmine/io.hpp"

#include "template_bank.inc"

namespace tacmine {
namespace {

using nlohmann::json;

enum class SlotKind { kTactics, kFeature, kInt, kRange, kDirection };

std::string_view slot_name(SlotKind k) {
  switch (k) {
    case SlotKind::kTactics: return "TACTICS";
    case SlotKind::kFeature: return "FEATURE";
    case SlotKind::kInt: return "INT";
    case SlotKind::kRange: return "RANGE";
    case SlotKind::kDirection: return "DIRECTION";
  }
  return "";
}

std::optional<SlotKind> slot_from_name(std::string_view s) {
  if (s == "TACTICS" || s == "TACTIC") return SlotKind::kTactics;
  if (s == "FEATURE" || s == "FEATURES") return SlotKind::kFeature;
  if (s == "INT") return SlotKind::kInt;
  if (s == "RANGE") return SlotKind::kRange;
  if (s == "DIRECTION") return SlotKind::kDirection;
  return std::nullopt;
}

struct RawToken {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool number = false;
  double value = 0;
  // "{NAME}" inside a template pattern.
  std::optional<SlotKind> placeholder = std::nullopt;
};

struct Item {
  std::string word;  // empty for slots
  std::optional<SlotKind> slot;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<double> numbers;  // tactic ids, features, int, range bounds
  std::optional<Direction> direction;
};

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<RawToken> tokenize(std::string_view text) {
  std::string low(text);
  std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
  std::vector<RawToken> out;
  std::size_t i = 0;
  const std::size_t n = low.size();
  while (i < n) {
    const char c = low[i];
    if (c == '{') {
      const std::size_t close = low.find('}', i);
      if (close != std::string::npos) {
        std::string name(text.substr(i + 1, close - i - 1));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
        RawToken t{low.substr(i, close - i + 1), i, close + 1};
        t.placeholder = slot_from_name(name);
        if (t.placeholder) {
          out.push_back(std::move(t));
          i = close + 1;
          continue;
        }
      }
      ++i;
      continue;
    }
    const bool neg_number = c == '-' && i + 1 < n && is_digit(low[i + 1]) && (i == 0 || !is_alnum(low[i - 1]));
    if (is_digit(c) || neg_number) {
      std::size_t j = i + 1;
      while (j < n && is_digit(low[j])) ++j;
      if (j + 1 < n && low[j] == '.' && is_digit(low[j + 1])) {
        ++j;
        while (j < n && is_digit(low[j])) ++j;
      }
      RawToken t{low.substr(i, j - i), i, j, true, std::stod(low.substr(i, j - i))};
      out.push_back(std::move(t));
      // "1-4" reads as two numbers joined by "to".
      if (j + 1 < n && low[j] == '-' && is_digit(low[j + 1])) out.push_back({"to", j, j + 1});
      i = (j < n && low[j] == '-' && j + 1 < n && is_digit(low[j + 1])) ? j + 1 : j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < n && (is_alnum(low[j]) || ((low[j] == '-' || low[j] == '\'') && j + 1 < n && is_alnum(low[j + 1]))))
        ++j;
      std::string word = low.substr(i, j - i);
      if (word.size() > 3 && word.ends_with("n't")) {
        std::string stem = word.substr(0, word.size() - 3);
        if (stem == "ca") stem = "can";
        if (stem == "wo") stem = "will";
        out.push_back({stem, i, j - 3});
        out.push_back({"not", j - 3, j});
      } else {
        out.push_back({std::move(word), i, j});
      }
      i = j;
      continue;
    }
    if (c == '#') out.push_back({"#", i, i + 1});
    ++i;
  }
  return out;
}

std::string stem(std::string w) {
  if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's' && w[w.size() - 2] != 'u' && w[w.size() - 2] != 'i')
    w.pop_back();
  return w;
}

std::vector<std::string> name_words(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : name) {
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(stem(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(stem(cur));
  return out;
}

std::optional<int> number_word(std::string_view w) {
  static const char* const kWords[] = {"two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  for (int i = 0; i < 9; ++i)
    if (w == kWords[i]) return i + 2;
  return std::nullopt;
}

std::optional<Direction> direction_word(std::string_view w) {
  static const char* const kFront[] = {"front", "beginning", "head", "before", "preceding", "previous",
                                       "earlier", "first", "prior", "leading", "prepend"};
  static const char* const kBack[] = {"back", "end", "tail", "after", "following", "follow-up", "followup",
                                      "subsequent", "later", "last", "next", "afterwards", "trailing", "append"};
  for (const char* f : kFront)
    if (w == f) return Direction::kFront;
  for (const char* b : kBack)
    if (w == b) return Direction::kBack;
  return std::nullopt;
}

bool is_tactic_word(std::string_view w) {
  return w == "tactic" || w == "tactics" || w == "pattern" || w == "patterns" || w == "#" || w == "t";
}

[[noreturn]] void invalid_arg(const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); }

// Turns raw tokens into words and typed slots. `ctx` is null for template
// patterns, which carry explicit placeholders instead of concrete mentions.
std::vector<Item> extract(const std::vector<RawToken>& raw, const ParseContext* ctx) {
  std::vector<Item> items;
  std::vector<char> used(raw.size(), 0);
  const std::size_t n = raw.size();
  auto word_at = [&](std::size_t i) -> std::string_view { return i < n && !used[i] ? std::string_view(raw[i].text) : ""; };
  auto num_at = [&](std::size_t i) -> std::optional<double> {
    if (i >= n || used[i]) return std::nullopt;
    if (raw[i].number) return raw[i].value;
    if (auto w = number_word(raw[i].text)) return static_cast<double>(*w);
    return std::nullopt;
  };
  auto emit = [&](Item it, std::size_t from, std::size_t to) {
    it.begin = raw[from].begin;
    it.end = raw[to - 1].end;
    for (std::size_t i = from; i < to; ++i) used[i] = 1;
    items.push_back(std::move(it));
  };

  for (std::size_t i = 0; i < n; ++i)
    if (raw[i].placeholder) {
      // A range slot absorbs its lead-in words the way a concrete range does.
      std::size_t from = i;
      if (raw[i].placeholder == SlotKind::kRange) {
        if (from > 0 && (word_at(from - 1) == "hits" || word_at(from - 1) == "hit")) --from;
        if (from > 0 && (word_at(from - 1) == "between" || word_at(from - 1) == "from")) --from;
      }
      Item it;
      it.slot = raw[i].placeholder;
      emit(std::move(it), from, i + 1);
    }

  if (ctx) {
    // Feature names, longest first; adjacent mentions joined by and/or form one slot.
    std::vector<std::pair<std::vector<std::string>, std::size_t>> names;
    for (std::size_t f = 0; f < ctx->feature_names.size(); ++f) names.emplace_back(name_words(ctx->feature_names[f]), f);
    std::stable_sort(names.begin(), names.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    auto feature_at = [&](std::size_t i) -> std::optional<std::pair<std::size_t, std::size_t>> {
      for (const auto& [words, f] : names) {
        if (words.empty() || i + words.size() > n) continue;
        bool ok = true;
        for (std::size_t w = 0; w < words.size() && ok; ++w) ok = !used[i + w] && stem(raw[i + w].text) == words[w];
        if (ok) return std::make_pair(f, words.size());
      }
      return std::nullopt;
    };
    for (std::size_t i = 0; i < n; ++i) {
      auto hit = feature_at(i);
      if (!hit) continue;
      Item it;
      it.slot = SlotKind::kFeature;
      it.numbers.push_back(static_cast<double>(hit->first));
      std::size_t j = i + hit->second;
      while (true) {
        std::size_t k = j;
        if (word_at(k) == "and" || word_at(k) == "or") ++k;
        auto next = feature_at(k);
        if (!next) break;
        it.numbers.push_back(static_cast<double>(next->first));
        j = k + next->second;
      }
      emit(std::move(it), i, j);
      i = j - 1;
    }

    // Tactic references.
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const std::string_view w = raw[i].text;
      const bool selection_word = w == "selected" || w == "selection" || w == "highlighted";
      if ((w == "this" || w == "these" || w == "that" || w == "those") &&
          (is_tactic_word(word_at(i + 1)) || word_at(i + 1) == "one" || word_at(i + 1) == "ones")) {
        if (ctx->selected.empty()) invalid_arg("'" + std::string(w) + " " + raw[i + 1].text + "' but no tactic is selected");
        Item it;
        it.slot = SlotKind::kTactics;
        for (int id : ctx->selected) it.numbers.push_back(id);
        emit(std::move(it), i, i + 2);
        continue;
      }
      if (selection_word) {
        if (ctx->selected.empty()) invalid_arg("'" + std::string(w) + "' but no tactic is selected");
        std::size_t j = i + 1;
        if (is_tactic_word(word_at(j)) || word_at(j) == "ones" || word_at(j) == "one") ++j;
        Item it;
        it.slot = SlotKind::kTactics;
        for (int id : ctx->selected) it.numbers.push_back(id);
        emit(std::move(it), i, j);
        continue;
      }
      if (!is_tactic_word(w) || !num_at(i + 1)) continue;
      Item it;
      it.slot = SlotKind::kTactics;
      std::size_t j = i + 1;
      it.numbers.push_back(*num_at(j++));
      while (true) {
        std::size_t k = j;
        const std::string_view sep = word_at(k);
        if (sep == "and" || sep == "or" || sep == "&") ++k;
        if (is_tactic_word(word_at(k))) ++k;
        if (k == j && !num_at(k)) break;
        auto v = num_at(k);
        if (!v) break;
        it.numbers.push_back(*v);
        j = k + 1;
      }
      emit(std::move(it), i, j);
      i = j - 1;
    }

    // Ranges: "N to M", "N-M", "between N and M", "from N to M".
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      const bool opener = word_at(i) == "between" || word_at(i) == "from";
      std::size_t a = i;
      if (opener) ++a;
      if (word_at(a) == "hits" || word_at(a) == "hit") ++a;
      auto lo = num_at(a);
      if (!lo) continue;
      const std::string_view joiner = word_at(a + 1);
      const bool ok = joiner == "to" || joiner == "through" || joiner == "until" || joiner == "till" ||
                      (joiner == "and" && word_at(i) == "between");
      auto hi = ok ? num_at(a + 2) : std::nullopt;
      if (!hi) continue;
      const std::size_t from = opener ? i : a;
      Item it;
      it.slot = SlotKind::kRange;
      it.numbers = {*lo, *hi};
      emit(std::move(it), from, a + 3);
    }

    // Remaining numbers. "one" only counts before "hit(s)".
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      std::optional<double> v = num_at(i);
      if (!v && raw[i].text == "one" && (word_at(i + 1) == "hit" || word_at(i + 1) == "hits")) v = 1;
      if (!v) continue;
      Item it;
      it.slot = SlotKind::kInt;
      it.numbers = {*v};
      emit(std::move(it), i, i + 1);
    }
  }

  // Direction words (also inside patterns, so both sides align). "follow up"
  // is the two-token spelling of "follow-up".
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    std::size_t len = 1;
    std::optional<Direction> d = direction_word(raw[i].text);
    if (!d && raw[i].text == "follow" && word_at(i + 1) == "up") d = Direction::kBack, len = 2;
    if (!d) continue;
    Item it;
    it.slot = SlotKind::kDirection;
    it.direction = d;
    emit(std::move(it), i, i + len);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    Item it;
    it.word = raw[i].text;
    it.begin = raw[i].begin;
    it.end = raw[i].end;
    items.push_back(std::move(it));
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.begin < b.begin; });
  return items;
}

std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

struct SlotRef {
  std::optional<SlotKind> slot;
  std::string expr;
  json fallback;
};

SlotRef parse_expr(const json& v) {
  SlotRef r;
  if (!v.is_string()) {
    r.fallback = v;
    return r;
  }
  std::string s = v.get<std::string>();
  const auto bar = s.find('|');
  std::string head = s.substr(0, bar);
  if (bar != std::string::npos) {
    const std::string tail = s.substr(bar + 1);
    r.fallback = json::parse(tail, nullptr, false);
    if (r.fallback.is_discarded()) r.fallback = tail;
  }
  r.expr = head;
  const auto dot = head.find('.');
  r.slot = slot_from_name(head.substr(0, dot));
  return r;
}

}  // namespace

ParseContext make_parse_context(const FeatureSchema& schema, std::span<const Tactic> tactics, std::vector<int> selected) {
  ParseContext ctx;
  for (const auto& f : schema.features()) ctx.feature_names.push_back(f.name);
  std::vector<std::size_t> lengths;
  for (const auto& t : tactics) {
    ctx.tactic_ids.push_back(t.id);
    lengths.push_back(t.length());
  }
  if (!lengths.empty()) {
    std::sort(lengths.begin(), lengths.end());
    ctx.typical_length = lengths[(lengths.size() - 1) / 2];
  }
  ctx.selected = std::move(selected);
  return ctx;
}

TemplateBank TemplateBank::builtin() { return from_json(json::parse(kBuiltinTemplateBank)); }

TemplateBank TemplateBank::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

TemplateBank TemplateBank::from_json(const json& j) {
  TemplateBank bank;
  try {
    if (j.at("format") != "tacmine.templates") throw Error(ErrorCode::kValidation, "template bank: wrong format tag");
    bank.threshold_ = j.value("threshold", 0.6);
    bank.serve_window_ = j.value("serve_window", 4);
    for (const auto& [canon, alts] : j.at("synonyms").items())
      for (const auto& a : alts) bank.synonyms_[stem(a.get<std::string>())] = canon;
    for (const auto& w : j.at("stopwords")) bank.stopwords_.insert(w.get<std::string>());
    std::vector<char> covered(kConstraintVariantCount, 0);
    for (const auto& t : j.at("templates")) {
      Template tpl;
      tpl.id = t.at("id").get<std::string>();
      const auto v = variant_index(t.at("variant").get<std::string>());
      if (!v) throw Error(ErrorCode::kValidation, "template " + tpl.id + ": unknown variant");
      tpl.variant = *v;
      tpl.pattern = t.at("pattern").get<std::string>();
      tpl.bind = t.at("bind");
      covered[tpl.variant] = 1;
      bank.templates_.push_back(std::move(tpl));
    }
    for (std::size_t v = 0; v < covered.size(); ++v)
      if (!covered[v]) throw Error(ErrorCode::kValidation, "template bank: no template for " + std::string(variant_name(v)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("template bank: ") + e.what());
  }
  return bank;
}

namespace {

std::vector<std::string> keys(const std::vector<Item>& items, const std::unordered_map<std::string, std::string>& synonyms,
                              const std::unordered_set<std::string>& stopwords, std::vector<const Item*>* owners = nullptr) {
  std::vector<std::string> out;
  for (const auto& it : items) {
    std::string key;
    if (it.slot) {
      key = "{" + std::string(slot_name(*it.slot)) + "}";
    } else {
      if (stopwords.count(it.word)) continue;
      key = stem(it.word);
      if (stopwords.count(key)) continue;
      if (auto s = synonyms.find(key); s != synonyms.end()) key = s->second;
    }
    out.push_back(std::move(key));
    if (owners) owners->push_back(&it);
  }
  return out;
}

}  // namespace

std::vector<TemplateScore> TemplateBank::rank(std::string_view text, const ParseContext& ctx) const {
  const auto items = extract(tokenize(text), &ctx);
  const auto q = keys(items, synonyms_, stopwords_);
  std::vector<bool> present(5, false);
  for (const auto& it : items)
    if (it.slot) present[static_cast<std::size_t>(*it.slot)] = true;

  std::vector<TemplateScore> out;
  for (std::size_t i = 0; i < templates_.size(); ++i) {
    const auto& tpl = templates_[i];
    const auto p = keys(extract(tokenize(tpl.pattern), nullptr), synonyms_, stopwords_);
    TemplateScore s;
    s.index = i;
    s.score = p.empty() && q.empty() ? 0.0 : 2.0 * static_cast<double>(lcs(p, q)) / static_cast<double>(p.size() + q.size());
    s.slots_ok = true;
    for (const auto& [field, v] : tpl.bind.items()) {
      const auto ref = parse_expr(v);
      if (ref.slot && ref.fallback.is_null() && !present[static_cast<std::size_t>(*ref.slot)]) s.slots_ok = false;
    }
    out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](const TemplateScore& a, const TemplateScore& b) { return a.score > b.score; });
  return out;
}

std::string TemplateBank::example_utterance(const Template& t, const ParseContext& ctx) const {
  std::vector<int> ids = ctx.tactic_ids;
  if (ids.empty()) ids = {1, 2};
  if (ids.size() == 1) ids.push_back(ids.front());
  const std::string feature = ctx.feature_names.empty() ? "feature" : ctx.feature_names.front();
  std::string out;
  const std::string& p = t.pattern;
  for (std::size_t i = 0; i < p.size();) {
    if (p[i] != '{') {
      out.push_back(p[i++]);
      continue;
    }
    const std::size_t close = p.find('}', i);
    const std::string name = p.substr(i + 1, close - i - 1);
    if (name == "TACTICS")
      out += t.variant == variant_index("MergeTactics")
                 ? "tactic " + std::to_string(ids[0]) + " and tactic " + std::to_string(ids[1])
                 : "tactic " + std::to_string(ids[0]);
    else if (name == "FEATURE")
      out += feature;
    else if (name == "INT")
      out += "2";
    else if (name == "RANGE")
      out += "1 to 4";
    else if (name == "DIRECTION")
      out += "end";
    i = close + 1;
  }
  return out;
}

ParsedSuggestion TemplateBank::parse(std::string_view text, const ParseContext& ctx) const {
  const auto items = extract(tokenize(text), &ctx);
  const auto ranking = rank(text, ctx);

  auto nearest = [&]() {
    json list = json::array();
    for (std::size_t i = 0; i < ranking.size() && i < 3; ++i) {
      const auto& tpl = templates_[ranking[i].index];
      list.push_back({{"template", tpl.id},
                      {"variant", variant_name(tpl.variant)},
                      {"example", example_utterance(tpl, ctx)},
                      {"score", ranking[i].score}});
    }
    return list;
  };

  const TemplateScore* best = nullptr;
  for (const auto& s : ranking)
    if (s.slots_ok && s.score >= threshold_) {
      best = &s;
      break;
    }
  if (!best) {
    // A template that fits the wording but lacks a feature mention means the
    // feature named in the text is unknown.
    for (const auto& s : ranking) {
      if (s.score < threshold_ || s.slots_ok) continue;
      const auto& tpl = templates_[s.index];
      bool wants_feature = false;
      for (const auto& [field, v] : tpl.bind.items()) {
        const auto ref = parse_expr(v);
        wants_feature = wants_feature || (ref.slot == SlotKind::kFeature && ref.fallback.is_null());
      }
      const bool has_feature = std::any_of(items.begin(), items.end(), [](const Item& it) { return it.slot == SlotKind::kFeature; });
      if (!wants_feature || has_feature) continue;
      const auto p = keys(extract(tokenize(tpl.pattern), nullptr), synonyms_, stopwords_);
      const std::unordered_set<std::string> expected(p.begin(), p.end());
      std::vector<const Item*> owners;
      const auto q = keys(items, synonyms_, stopwords_, &owners);
      std::string unknown;
      for (std::size_t i = 0; i < q.size(); ++i)
        if (!owners[i]->slot && !expected.count(q[i])) unknown += (unknown.empty() ? "" : " ") + owners[i]->word;
      if (unknown.empty()) continue;
      throw Error(ErrorCode::kNotFound, "unknown feature '" + unknown + "'", {{"token", unknown}, {"nearest", nearest()}});
    }
    throw Error(ErrorCode::kUnparsed, "no template matches '" + std::string(text) + "'", {{"nearest", nearest()}});
  }

  const Template& tpl = templates_[best->index];
  ParsedSuggestion out;
  out.raw_text = std::string(text);
  out.confidence = best->score;
  out.template_id = tpl.id;

  std::vector<const Item*> by_kind(5, nullptr);
  std::vector<int> tactic_ids;
  std::vector<std::size_t> features;
  for (const auto& it : items) {
    if (!it.slot) continue;
    const auto kind = static_cast<std::size_t>(*it.slot);
    if (!by_kind[kind]) by_kind[kind] = &it;
    if (*it.slot == SlotKind::kTactics)
      for (double v : it.numbers) {
        if (v != std::floor(v)) throw Error(ErrorCode::kValidation, "tactic ids are whole numbers");
        const int id = static_cast<int>(v);
        if (std::find(ctx.tactic_ids.begin(), ctx.tactic_ids.end(), id) == ctx.tactic_ids.end())
          throw Error(ErrorCode::kNotFound, "unknown tactic " + std::to_string(id), {{"token", std::to_string(id)}});
        if (std::find(tactic_ids.begin(), tactic_ids.end(), id) == tactic_ids.end()) tactic_ids.push_back(id);
      }
    if (*it.slot == SlotKind::kFeature)
      for (double v : it.numbers) {
        const auto f = static_cast<std::size_t>(v);
        if (std::find(features.begin(), features.end(), f) == features.end()) features.push_back(f);
      }
  }

  std::vector<bool> span_used(5, false);
  auto value_of = [&](const json& spec) -> json {
    const auto ref = parse_expr(spec);
    if (!ref.slot) {
      if (ref.expr == "TYPICAL+1") return ctx.typical_length + 1;
      if (ref.expr == "TYPICAL-1") return std::max<std::size_t>(1, ctx.typical_length > 0 ? ctx.typical_length - 1 : 1);
      if (ref.expr == "SERVE_WINDOW") return serve_window_;
      return ref.fallback;
    }
    const auto kind = static_cast<std::size_t>(*ref.slot);
    const Item* it = by_kind[kind];
    if (!it) return ref.fallback;
    span_used[kind] = true;
    switch (*ref.slot) {
      case SlotKind::kTactics:
        return ref.expr == "TACTIC" ? json(tactic_ids.front()) : json(tactic_ids);
      case SlotKind::kFeature:
        return ref.expr == "FEATURES" ? json(features) : json(features.front());
      case SlotKind::kInt:
        return it->numbers.front();
      case SlotKind::kRange:
        return ref.expr == "RANGE.hi" ? it->numbers[1] : it->numbers[0];
      case SlotKind::kDirection:
        return std::string(to_string(*it->direction));
    }
    return nullptr;
  };

  json fields = json::object();
  for (const auto& [field, spec] : tpl.bind.items()) fields[field] = value_of(spec);

  auto whole = [&](const char* field) -> long long {
    const double v = fields.at(field).get<double>();
    if (v != std::floor(v)) throw Error(ErrorCode::kValidation, std::string(field) + " must be a whole number");
    return static_cast<long long>(v);
  };
  auto count = [&](const char* field) -> std::size_t {
    const long long v = whole(field);
    if (v < 1) throw Error(ErrorCode::kValidation, std::string(field) + " must be at least 1");
    return static_cast<std::size_t>(v);
  };
  auto direction = [&]() {
    const auto d = direction_from_string(fields.at("direction").get<std::string>());
    if (!d) throw Error(ErrorCode::kValidation, "unknown direction");
    return *d;
  };

  switch (tpl.variant) {
    case 0:
      out.constraint = constraint::IndexRange{static_cast<int>(whole("lo")), static_cast<int>(whole("hi"))};
      break;
    case 1: {
      constraint::LengthRange lr{count("min"), std::nullopt};
      if (!fields.at("max").is_null()) lr.max = count("max");
      out.constraint = lr;
      break;
    }
    case 2:
      out.constraint = constraint::FeatureImportance{fields.at("feature").get<std::size_t>(), fields.at("value").get<double>()};
      break;
    case 3:
      out.constraint = constraint::SplitByFeature{fields.at("tactics").get<std::vector<int>>(), fields.at("feature").get<std::size_t>()};
      break;
    case 4:
      out.constraint =
          constraint::SpecifyFeature{fields.at("tactics").get<std::vector<int>>(), fields.at("features").get<std::vector<std::size_t>>()};
      break;
    case 5:
      out.constraint = constraint::MergeTactics{fields.at("tactics").get<std::vector<int>>()};
      break;
    case 6:
      out.constraint = constraint::ExpandTactic{fields.at("tactic").get<int>(), direction(), static_cast<int>(count("hits"))};
      break;
    case 7:
      out.constraint = constraint::TrimTactic{fields.at("tactic").get<int>(), direction(), static_cast<int>(count("hits"))};
      break;
    case 8:
      out.constraint = constraint::DeleteTactic{fields.at("tactics").get<std::vector<int>>()};
      break;
    default:
      throw Error(ErrorCode::kValidation, "template " + tpl.id + ": unsupported variant");
  }

  for (std::size_t kind = 0; kind < 5; ++kind)
    if (span_used[kind])
      for (const auto& it : items)
        if (it.slot && static_cast<std::size_t>(*it.slot) == kind)
          out.slot_spans.push_back({std::string(slot_name(*it.slot)), it.begin, it.end});
  std::sort(out.slot_spans.begin(), out.slot_spans.end(), [](const SlotSpan& a, const SlotSpan& b) { return a.begin < b.begin; });
  return out;
}

}  // namespace tacmine
