#include "tacmine/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tacmine/error.hpp"

namespace tacmine {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kValidation, msg); }

std::string rally_label(const json& r, std::size_t pos) {
  if (r.is_object() && r.contains("id") && r["id"].is_number_integer())
    return "rally " + std::to_string(r["id"].get<long long>());
  return "rally #" + std::to_string(pos);
}

PlayerId read_player(const json& r, const char* field, const std::string& label) {
  if (!r.contains(field)) fail(label + ": missing field '" + field + "'");
  const auto& v = r[field];
  if (!v.is_number_integer()) fail(label + ": field '" + std::string(field) + "' must be 0 or 1");
  const auto p = v.get<long long>();
  if (p != 0 && p != 1) fail(label + ": field '" + std::string(field) + "' must be 0 or 1");
  return static_cast<PlayerId>(p);
}

}  // namespace

json schema_to_json(const FeatureSchema& schema) {
  json out = json::array();
  for (const auto& f : schema.features()) out.push_back({{"name", f.name}, {"values", f.values}});
  return out;
}

FeatureSchema schema_from_json(const json& j) {
  if (!j.is_array()) fail("schema: expected a feature list");
  std::vector<Feature> features;
  for (const auto& f : j) {
    if (!f.is_object() || !f.contains("name") || !f.contains("values") || !f["name"].is_string() ||
        !f["values"].is_array())
      fail("schema: each feature needs 'name' and 'values'");
    Feature feature{f["name"].get<std::string>(), {}};
    for (const auto& v : f["values"]) {
      if (!v.is_string()) fail("schema: value names of '" + feature.name + "' must be strings");
      feature.values.push_back(v.get<std::string>());
    }
    features.push_back(std::move(feature));
  }
  return FeatureSchema(std::move(features));
}

Dataset validate_dataset(const json& raw) {
  if (!raw.is_object()) fail("dataset: expected an object");
  if (raw.contains("format") && raw["format"] != "tacmine.dataset")
    fail("dataset: unexpected format tag " + raw["format"].dump());
  if (raw.contains("version") && raw["version"] != kFormatVersion)
    fail("dataset: unsupported format version " + raw["version"].dump());
  if (!raw.contains("schema")) fail("dataset: missing field 'schema'");
  Dataset d;
  d.schema = schema_from_json(raw["schema"]);
  const std::size_t k = d.schema.size();
  if (raw.contains("focal_player")) {
    d.focal_player = read_player(raw, "focal_player", "dataset");
  }
  if (!raw.contains("rallies") || !raw["rallies"].is_array()) fail("dataset: missing field 'rallies'");
  if (raw["rallies"].empty()) fail("dataset: empty rally list");

  std::set<int> seen;
  std::size_t pos = 0;
  for (const auto& r : raw["rallies"]) {
    const std::string label = rally_label(r, pos++);
    if (!r.is_object()) fail(label + ": expected an object");
    if (!r.contains("id") || !r["id"].is_number_integer()) fail(label + ": missing field 'id'");
    Rally rally;
    rally.id = r["id"].get<int>();
    if (!seen.insert(rally.id).second) fail(label + ": duplicate rally id");
    rally.k = k;
    rally.server = read_player(r, "server", label);
    rally.winner = read_player(r, "winner", label);
    if (!r.contains("events") || !r["events"].is_array()) fail(label + ": missing field 'events'");
    if (r["events"].empty()) fail(label + ": empty rally");
    std::size_t hit = 0;
    for (const auto& e : r["events"]) {
      const std::string where = label + ": events[" + std::to_string(hit) + "]";
      if (!e.is_array() || e.size() != k)
        fail(where + " must list exactly " + std::to_string(k) + " values");
      for (std::size_t f = 0; f < k; ++f) {
        if (!e[f].is_string()) fail(where + " has a non-string value for feature '" + d.schema.feature(f).name + "'");
        const auto name = e[f].get<std::string>();
        const auto id = d.schema.value_id(f, name);
        if (!id) fail(where + " references unknown value '" + name + "' for feature '" + d.schema.feature(f).name + "'");
        rally.values.push_back(*id);
      }
      ++hit;
    }
    d.rallies.push_back(std::move(rally));
  }
  return d;
}

json dataset_to_json(const Dataset& d) {
  json rallies = json::array();
  for (const auto& r : d.rallies) {
    json events = json::array();
    for (std::size_t i = 0; i < r.length(); ++i) {
      json e = json::array();
      for (std::size_t f = 0; f < r.k; ++f) e.push_back(d.schema.feature(f).values[static_cast<std::size_t>(r.at(i, f))]);
      events.push_back(std::move(e));
    }
    rallies.push_back({{"id", r.id}, {"server", r.server}, {"winner", r.winner}, {"events", std::move(events)}});
  }
  return {{"format", "tacmine.dataset"},
          {"version", kFormatVersion},
          {"schema", schema_to_json(d.schema)},
          {"focal_player", d.focal_player},
          {"rallies", std::move(rallies)}};
}

Dataset load_dataset(const std::filesystem::path& path) { return validate_dataset(read_json_file(path)); }

void save_dataset(const Dataset& d, const std::filesystem::path& path) { write_json_file(path, dataset_to_json(d)); }

json tactic_to_json(const Tactic& t, const FeatureSchema& schema) {
  json events = json::array();
  for (std::size_t e = 0; e < t.length(); ++e) {
    json ev = json::array();
    for (std::size_t f = 0; f < t.k; ++f) {
      const ValueId v = t.at(e, f);
      if (v == kNull)
        ev.push_back(nullptr);
      else
        ev.push_back(schema.feature(f).values.at(static_cast<std::size_t>(v)));
    }
    events.push_back(std::move(ev));
  }
  return {{"id", t.id}, {"pinned", t.pinned}, {"events", std::move(events)}};
}

Tactic tactic_from_json(const json& j, const FeatureSchema& schema) {
  if (!j.is_object() || !j.contains("events") || !j["events"].is_array())
    fail("tactic: expected an object with 'events'");
  Tactic t;
  t.id = j.value("id", 0);
  t.pinned = j.value("pinned", false);
  t.k = schema.size();
  const std::string where = "tactic " + std::to_string(t.id);
  for (const auto& e : j["events"]) {
    if (!e.is_array() || e.size() != t.k) fail(where + ": each event must list " + std::to_string(t.k) + " slots");
    for (std::size_t f = 0; f < t.k; ++f) {
      if (e[f].is_null()) {
        t.slots.push_back(kNull);
        continue;
      }
      if (!e[f].is_string()) fail(where + ": slot values must be strings or null");
      const auto id = schema.value_id(f, e[f].get<std::string>());
      if (!id) fail(where + ": unknown value '" + e[f].get<std::string>() + "' for feature '" + schema.feature(f).name + "'");
      t.slots.push_back(*id);
    }
  }
  validate_tactic(t, schema);
  return t;
}

json tactics_to_json(const std::vector<Tactic>& tactics, const FeatureSchema& schema) {
  json out = json::array();
  for (const auto& t : tactics) out.push_back(tactic_to_json(t, schema));
  return out;
}

std::vector<Tactic> tactics_from_json(const json& j, const FeatureSchema& schema) {
  if (!j.is_array()) fail("tactics: expected an array");
  std::vector<Tactic> out;
  std::set<int> ids;
  for (const auto& item : j) {
    out.push_back(tactic_from_json(item, schema));
    if (!ids.insert(out.back().id).second) fail("tactics: duplicate tactic id " + std::to_string(out.back().id));
  }
  return out;
}

json metric_params_to_json(const MetricParams& p, const FeatureSchema& schema) {
  json out = {{"alpha", p.alpha}, {"beta", p.beta}, {"index_range", nullptr}, {"length_range", nullptr}};
  if (p.index_range) out["index_range"] = {p.index_range->lo, p.index_range->hi};
  if (p.length_range) {
    out["length_range"] = json::array({p.length_range->min, nullptr});
    if (p.length_range->max) out["length_range"][1] = *p.length_range->max;
  }
  json imp = json::object();
  for (const auto& [f, w] : p.importance) imp[schema.feature(f).name] = w;
  out["importance"] = std::move(imp);
  return out;
}

MetricParams metric_params_from_json(const json& j, const FeatureSchema& schema) {
  if (!j.is_object()) fail("metric params: expected an object");
  MetricParams p;
  try {
    if (j.contains("alpha")) p.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) p.beta = j.at("beta").get<double>();
    if (j.contains("index_range") && !j["index_range"].is_null()) {
      const auto& r = j["index_range"];
      p.index_range = IndexRange{r.at(0).get<int>(), r.at(1).get<int>()};
    }
    if (j.contains("length_range") && !j["length_range"].is_null()) {
      const auto& r = j["length_range"];
      LengthRange lr{r.at(0).get<std::size_t>(), std::nullopt};
      if (r.size() > 1 && !r[1].is_null()) lr.max = r[1].get<std::size_t>();
      p.length_range = lr;
    }
    if (j.contains("importance"))
      for (const auto& [name, w] : j["importance"].items()) {
        const auto f = schema.feature_id(name);
        if (!f) fail("metric params: unknown feature '" + name + "'");
        p.importance[*f] = w.get<double>();
      }
  } catch (const json::exception& e) {
    fail(std::string("metric params: ") + e.what());
  }
  p.validate();
  return p;
}

json miner_config_to_json(const MinerConfig& c) {
  return {{"seed", c.seed},
          {"max_iterations", c.max_iterations},
          {"patience", c.patience},
          {"candidates_per_iteration", c.candidates_per_iteration},
          {"max_tactic_length", c.max_tactic_length}};
}

MinerConfig miner_config_from_json(const json& j) {
  if (!j.is_object()) fail("miner config: expected an object");
  MinerConfig c;
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<int>();
    if (j.contains("patience")) c.patience = j["patience"].get<int>();
    if (j.contains("candidates_per_iteration")) c.candidates_per_iteration = j["candidates_per_iteration"].get<int>();
    if (j.contains("max_tactic_length")) c.max_tactic_length = j["max_tactic_length"].get<int>();
  } catch (const json::exception& e) {
    fail(std::string("miner config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write-then-rename so readers never observe a half-written file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kValidation, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace tacmine
