#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmtc/harness.hpp"

namespace mmtc {

using Json = nlohmann::json;

// Every recognised key with its default value.
Json default_config_json();

// Applies "a.b.c=value". The value is parsed as JSON when possible and
// taken as a plain string otherwise. Unknown keys are rejected.
void apply_override(Json& cfg, std::string_view assignment);

// Merges a user document over the defaults; unknown keys are rejected.
Json merge_config(const Json& user);

// Resolves and validates. Errors are ConfigError naming the field.
ExperimentConfig config_from_json(const Json& doc);
Json config_to_json(const ExperimentConfig& cfg);

// Resolved document before interpretation: defaults, file, overrides, seed.
Json load_config_doc(const std::string& path, const std::vector<std::string>& overrides,
                     std::optional<std::string> env_seed = std::nullopt);

// Reads the file (empty path: defaults only), applies overrides, then the
// MMTC_SEED environment variable when `env_seed` is set.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                             std::optional<std::string> env_seed = std::nullopt);

}  // namespace mmtc
