// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tokenjoule/orchestrator.hpp"

namespace tokenjoule {

/// One configured endpoint plus its run-shaping options.
struct EndpointSection {
    EndpointConfig endpoint;
    std::optional<std::string> gpu_name;
    std::optional<SamplerConfig> sampler;
    std::optional<ReplayConfig> replay;
    std::optional<int> batch_size;
};

/// Tool configuration file: JSON with ${ENV_VAR} interpolation inside
/// string values. API keys come from the environment (either interpolated
/// or via TOKENJOULE_API_KEY_<ENDPOINT>), never from flags.
struct ToolConfig {
    std::filesystem::path suite_path;
    std::optional<std::filesystem::path> catalog_path;
    std::filesystem::path output_dir = "tokenjoule-out";
    std::map<std::string, EndpointSection> endpoints;
    int passes = 10;
    int batch_size = 8;
    std::vector<std::string> schedule;
    double sustained_factor = 0.9;
};

ToolConfig load_tool_config(const std::filesystem::path& path);

/// ${NAME} -> environment value; unknown variables raise ConfigError.
std::string interpolate_env(const std::string& value);

/// Environment variable consulted for an endpoint's key when the config
/// does not provide one: TOKENJOULE_API_KEY_<NAME> (upper-cased, '-' and
/// '.' mapped to '_').
std::string api_key_env_name(const std::string& endpoint_name);

/// Builds the RunConfig for one named endpoint, applying overrides.
RunConfig make_run_config(const ToolConfig& config, const std::string& endpoint_name,
                          const std::string& suite_checksum, std::optional<int> passes_override,
                          std::optional<int> batch_override);

}  // namespace tokenjoule
