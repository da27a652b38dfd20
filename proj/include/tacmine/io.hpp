#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/cover.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/model.hpp"

namespace tacmine {

inline constexpr int kFormatVersion = 1;

// Builds a Dataset from its structured-text description, enforcing every
// model invariant. Errors name the offending rally id and field.
Dataset validate_dataset(const nlohmann::json& raw);
nlohmann::json dataset_to_json(const Dataset& d);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

// Tactics serialize as {"id", "pinned", "events": [[value-name | null, ...], ...]}.
nlohmann::json tactic_to_json(const Tactic& t, const FeatureSchema& schema);
Tactic tactic_from_json(const nlohmann::json& j, const FeatureSchema& schema);
nlohmann::json tactics_to_json(const std::vector<Tactic>& tactics, const FeatureSchema& schema);
std::vector<Tactic> tactics_from_json(const nlohmann::json& j, const FeatureSchema& schema);

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

// {"alpha", "beta", "index_range": [lo, hi] | null,
//  "length_range": [min, max | null] | null, "importance": {feature-name: w}}
nlohmann::json metric_params_to_json(const MetricParams& p, const FeatureSchema& schema);
MetricParams metric_params_from_json(const nlohmann::json& j, const FeatureSchema& schema);

nlohmann::json miner_config_to_json(const MinerConfig& c);
// Missing keys keep their defaults.
MinerConfig miner_config_from_json(const nlohmann::json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace tacmine
