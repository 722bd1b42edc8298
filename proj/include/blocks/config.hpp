#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "blocks/simulator.hpp"
#include "json.hpp"

namespace blocks {

enum class ConfigFormat { Toml, Json };

/// Parses TOML or JSON text into a JSON tree. `origin` names the source in
/// error messages.
nlohmann::json parse_config_text(std::string_view text, ConfigFormat format,
                                 const std::string& origin = "<config>");

/// Picks the format from the extension (.json, otherwise TOML).
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Strict conversion: unknown keys and wrong types raise ConfigError naming
/// the key. The result is validated.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ScenarioConfig& c);

struct Override {
  std::string label;
  nlohmann::json delta;
};

/// A scenario document: base keys plus an optional `override` array of
/// tables, each with a `label` and any config keys to change.
struct ScenarioDocument {
  nlohmann::json base;
  std::vector<Override> overrides;
};

ScenarioDocument split_document(const nlohmann::json& doc);

/// base with `delta` deep-merged on top.
nlohmann::json merged(nlohmann::json base, const nlohmann::json& delta);

/// Sweep entries for a document; an override that sets `seed` keeps it.
std::vector<SweepEntry> expand(const ScenarioDocument& doc);

}  // namespace blocks
