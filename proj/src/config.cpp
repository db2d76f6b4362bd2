// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tokenjoule/errors.hpp"

namespace tokenjoule {

std::string interpolate_env(const std::string& value) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        const std::size_t open = value.find("${", pos);
        if (open == std::string::npos) {
            out.append(value.substr(pos));
            break;
        }
        const std::size_t close = value.find('}', open + 2);
        if (close == std::string::npos)
            throw ConfigError("unterminated ${...} in config value: " + value);
        out.append(value.substr(pos, open - pos));
        const std::string name = value.substr(open + 2, close - open - 2);
        const char* env = std::getenv(name.c_str());
        if (env == nullptr) throw ConfigError("environment variable not set: " + name);
        out.append(env);
        pos = close + 1;
    }
    return out;
}

std::string api_key_env_name(const std::string& endpoint_name) {
    std::string out = "TOKENJOULE_API_KEY_";
    for (char c : endpoint_name) {
        const unsigned char u = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_');
    }
    return out;
}

namespace {

std::string get_interpolated(const nlohmann::json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    return interpolate_env(j.at(key).get<std::string>());
}

EndpointSection parse_endpoint_section(const std::string& name, const nlohmann::json& j) {
    EndpointSection section;
    EndpointConfig& ep = section.endpoint;
    ep.base_url = get_interpolated(j, "base_url", "");
    ep.model_id = get_interpolated(j, "model_id", "");
    ep.deployment_kind = deployment_kind_from_string(j.value("deployment_kind", "local"));
    ep.temperature = j.value("temperature", 0.7);
    ep.sampling_seed = j.value("seed", std::int64_t{42});
    ep.request_timeout_s = j.value("request_timeout_s", 300.0);
    ep.max_retries = j.value("max_retries", 3);
    ep.fallback_tokenizer = j.value("fallback_tokenizer", "whitespace");

    // Keys come from the environment only: either an interpolated config
    // value or the endpoint's TOKENJOULE_API_KEY_<NAME> variable.
    if (j.contains("api_key")) {
        ep.api_key = interpolate_env(j.at("api_key").get<std::string>());
    } else if (const char* env = std::getenv(api_key_env_name(name).c_str())) {
        ep.api_key = std::string(env);
    }

    if (j.contains("gpu")) section.gpu_name = j.at("gpu").get<std::string>();
    if (j.contains("batch_size")) section.batch_size = j.at("batch_size").get<int>();
    if (j.contains("sampler")) {
        SamplerConfig sampler;
        sampler.command = interpolate_env(j.at("sampler").at("command").get<std::string>());
        sampler.period_s = j.at("sampler").value("period_s", 0.1);
        section.sampler = std::move(sampler);
    }
    if (j.contains("replay_trace"))
        section.replay = ReplayConfig{j.at("replay_trace").get<std::string>()};
    return section;
}

}  // namespace

ToolConfig load_tool_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad config file " + path.string() + ": " + e.what());
    }

    ToolConfig config;
    try {
        if (j.contains("suite")) config.suite_path = j.at("suite").get<std::string>();
        if (j.contains("catalog"))
            config.catalog_path = std::filesystem::path(j.at("catalog").get<std::string>());
        if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
        config.passes = j.value("passes", 10);
        config.batch_size = j.value("batch_size", 8);
        if (j.contains("schedule")) config.schedule = j.at("schedule").get<std::vector<std::string>>();
        config.sustained_factor = j.value("sustained_factor", 0.9);
        if (j.contains("endpoints")) {
            for (const auto& [name, section] : j.at("endpoints").items())
                config.endpoints.emplace(name, parse_endpoint_section(name, section));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config file " + path.string() + ": " + e.what());
    }

    if (!(config.sustained_factor >= 0.85 && config.sustained_factor <= 0.95))
        throw ConfigError("sustained_factor must lie in [0.85, 0.95]");
    return config;
}

RunConfig make_run_config(const ToolConfig& config, const std::string& endpoint_name,
                          const std::string& suite_checksum, std::optional<int> passes_override,
                          std::optional<int> batch_override) {
    const auto it = config.endpoints.find(endpoint_name);
    if (it == config.endpoints.end())
        throw ConfigError("no endpoint named '" + endpoint_name + "' in config");
    const EndpointSection& section = it->second;

    RunConfig run;
    run.suite_ref = suite_checksum;
    run.endpoint = section.endpoint;
    run.endpoint_name = endpoint_name;
    run.gpu_name = section.gpu_name;
    run.passes = passes_override.value_or(config.passes);
    run.batch_size = batch_override.value_or(section.batch_size.value_or(config.batch_size));
    run.schedule = config.schedule;
    run.sampler = section.sampler;
    run.replay = section.replay;
    validate_run_config(run);
    return run;
}

}  // namespace tokenjoule
