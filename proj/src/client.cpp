// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/hash.hpp"
#include "tokenjoule/tokens.hpp"

namespace tokenjoule {

namespace {

constexpr const char* kChatPath = "/v1/chat/completions";
constexpr std::string_view kMockPrefix = "mock:";

struct ParsedUrl {
    std::string scheme_host_port;  // httplib client target
    bool https = false;
};

ParsedUrl parse_base_url(const std::string& base_url) {
    ParsedUrl out;
    if (base_url.rfind("https://", 0) == 0) {
        out.https = true;
    } else if (base_url.rfind("http://", 0) != 0) {
        throw ConfigError("unsupported endpoint URL: " + base_url);
    }
    out.scheme_host_port = base_url;
    while (!out.scheme_host_port.empty() && out.scheme_host_port.back() == '/')
        out.scheme_host_port.pop_back();
    return out;
}

void set_timeouts(httplib::Client& cli, double timeout_s) {
    const auto whole = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::duration<double>(timeout_s));
    cli.set_connection_timeout(whole);
    cli.set_read_timeout(whole);
    cli.set_write_timeout(whole);
}

}  // namespace

/// Scripted stand-in for a chat endpoint. The script file holds per-request
/// latency and usage, keyed by (pass, prompt id); scalars broadcast and
/// matrices wrap modulo their size:
///   {
///     "prompt_tokens": 12,
///     "completion_tokens": 300 | [per prompt] | [[per pass][per prompt]],
///     "latency_s": 1.0 | [...] | [[...]],
///     "failures": [[pass, prompt_id, failed_attempts_before_success], ...]
///   }
class MockScript {
  public:
    static std::shared_ptr<const MockScript> load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read mock script: " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad mock script " + path.string() + ": " + e.what());
        }
        auto script = std::make_shared<MockScript>();
        script->prompt_tokens_ = Field::parse(j, "prompt_tokens", 12.0);
        script->completion_tokens_ = Field::parse(j, "completion_tokens", 256.0);
        script->latency_ = Field::parse(j, "latency_s", 1.0);
        if (j.contains("failures")) {
            for (const auto& row : j.at("failures")) {
                if (!row.is_array() || row.size() != 3)
                    throw ParseError("mock script failures entries must be [pass, prompt, count]");
                script->failures_[{row[0].get<int>(), row[1].get<int>()}] = row[2].get<int>();
            }
        }
        return script;
    }

    double latency_s(int pass, int prompt_id) const { return latency_.at(pass, prompt_id); }
    long prompt_tokens(int pass, int prompt_id) const {
        return std::lround(prompt_tokens_.at(pass, prompt_id));
    }
    long completion_tokens(int pass, int prompt_id) const {
        return std::lround(completion_tokens_.at(pass, prompt_id));
    }
    int failures_before_success(int pass, int prompt_id) const {
        const auto it = failures_.find({pass, prompt_id});
        return it == failures_.end() ? 0 : it->second;
    }

  private:
    struct Field {
        double scalar = 0.0;
        std::vector<std::vector<double>> matrix;  // [pass][prompt]

        static Field parse(const nlohmann::json& j, const char* key, double fallback) {
            Field f;
            if (!j.contains(key)) {
                f.scalar = fallback;
                return f;
            }
            const auto& v = j.at(key);
            if (v.is_number()) {
                f.scalar = v.get<double>();
            } else if (v.is_array() && !v.empty() && v[0].is_number()) {
                f.matrix.push_back(v.get<std::vector<double>>());
            } else if (v.is_array()) {
                f.matrix = v.get<std::vector<std::vector<double>>>();
            } else {
                throw ParseError(std::string("mock script field ") + key +
                                 " must be a number or array");
            }
            for (const auto& row : f.matrix) {
                if (row.empty()) throw ParseError(std::string("empty row in ") + key);
            }
            return f;
        }

        double at(int pass, int prompt_id) const {
            if (matrix.empty()) return scalar;
            const auto& row = matrix[static_cast<std::size_t>(pass) % matrix.size()];
            return row[static_cast<std::size_t>(prompt_id) % row.size()];
        }
    };

    Field prompt_tokens_, completion_tokens_, latency_;
    std::map<std::pair<int, int>, int> failures_;
};

std::string_view to_string(DeploymentKind k) {
    switch (k) {
        case DeploymentKind::local: return "local";
        case DeploymentKind::api_free: return "api_free";
        case DeploymentKind::api_paid: return "api_paid";
    }
    throw DomainError("unknown deployment kind");
}

DeploymentKind deployment_kind_from_string(std::string_view s) {
    if (s == "local") return DeploymentKind::local;
    if (s == "api_free") return DeploymentKind::api_free;
    if (s == "api_paid") return DeploymentKind::api_paid;
    throw ParseError("unknown deployment kind: " + std::string(s));
}

std::string_view to_string(RequestStatus s) {
    switch (s) {
        case RequestStatus::ok: return "ok";
        case RequestStatus::failed: return "failed";
        case RequestStatus::retried_ok: return "retried_ok";
    }
    throw DomainError("unknown request status");
}

RequestStatus request_status_from_string(std::string_view s) {
    if (s == "ok") return RequestStatus::ok;
    if (s == "failed") return RequestStatus::failed;
    if (s == "retried_ok") return RequestStatus::retried_ok;
    throw ParseError("unknown request status: " + std::string(s));
}

std::string_view to_string(TokenSource s) {
    return s == TokenSource::reported ? "reported" : "counted";
}

TokenSource token_source_from_string(std::string_view s) {
    if (s == "reported") return TokenSource::reported;
    if (s == "counted") return TokenSource::counted;
    throw ParseError("unknown token source: " + std::string(s));
}

void validate_endpoint_config(const EndpointConfig& config) {
    if (config.base_url.empty()) throw ConfigError("endpoint base_url is empty");
    if (!(config.temperature >= 0.0 && config.temperature <= 2.0))
        throw ConfigError("temperature must lie in [0, 2]");
    if (config.request_timeout_s <= 0) throw ConfigError("request timeout must be positive");
    if (config.max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

nlohmann::json chat_request_body(const EndpointConfig& config, const PromptSpec& prompt) {
    // Exactly one user message; no system instructions.
    return nlohmann::json{
        {"model", config.model_id},
        {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"}, {"content", prompt.text}}})},
        {"temperature", config.temperature},
        {"seed", config.sampling_seed},
        {"max_tokens", prompt.target_tokens},
    };
}

EndpointClient::EndpointClient(EndpointConfig config) : config_(std::move(config)) {
    validate_endpoint_config(config_);
    if (config_.base_url.rfind(kMockPrefix, 0) == 0) {
        script_ = MockScript::load(std::filesystem::path(
            config_.base_url.substr(kMockPrefix.size())));
    }
}

EndpointClient::~EndpointClient() = default;

void EndpointClient::probe() const {
    if (script_) return;  // script already loaded and validated
    const ParsedUrl url = parse_base_url(config_.base_url);
    httplib::Client cli(url.scheme_host_port);
    set_timeouts(cli, std::min(config_.request_timeout_s, 10.0));
    const auto res = cli.Get("/v1/models");
    // Any HTTP response (even 404) proves the endpoint is reachable.
    if (!res) throw EndpointError("endpoint unreachable: " + config_.base_url + " (" +
                                  httplib::to_string(res.error()) + ")");
}

RequestRecord EndpointClient::send_chat(const PromptSpec& prompt) const {
    if (script_) return simulate_chat(prompt, mono_now_s());
    return send_http(prompt);
}

RequestRecord EndpointClient::send_http(const PromptSpec& prompt) const {
    const ParsedUrl url = parse_base_url(config_.base_url);
    const std::string body = chat_request_body(config_, prompt).dump();

    RequestRecord record;
    record.prompt_id = prompt.id;
    record.start_time_s = mono_now_s();

    const int max_attempts = config_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        record.attempt_count = attempt;
        httplib::Client cli(url.scheme_host_port);
        set_timeouts(cli, config_.request_timeout_s);
        httplib::Headers headers;
        if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);

        const auto res = cli.Post(kChatPath, headers, body, "application/json");
        if (!res || res->status < 200 || res->status >= 300) {
            continue;  // timeout, transport error, or non-2xx: retry
        }

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            continue;
        }

        std::string content;
        try {
            content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            continue;
        }

        if (j.contains("usage") && j["usage"].contains("prompt_tokens") &&
            j["usage"].contains("completion_tokens")) {
            record.prompt_tokens = j["usage"]["prompt_tokens"].get<long>();
            record.completion_tokens = j["usage"]["completion_tokens"].get<long>();
            record.token_source = TokenSource::reported;
        } else {
            record.prompt_tokens = count_tokens(prompt.text, config_.fallback_tokenizer);
            record.completion_tokens = count_tokens(content, config_.fallback_tokenizer);
            record.token_source = TokenSource::counted;
        }
        if (record.completion_tokens <= 0) continue;  // degenerate response

        record.status = attempt > 1 ? RequestStatus::retried_ok : RequestStatus::ok;
        record.wall_time_s = mono_now_s() - record.start_time_s;
        return record;
    }

    record.status = RequestStatus::failed;
    record.wall_time_s = mono_now_s() - record.start_time_s;
    return record;
}

RequestRecord EndpointClient::simulate_chat(const PromptSpec& prompt,
                                            double virtual_start_s) const {
    if (!script_) throw ConfigError("simulate_chat requires a scripted endpoint");
    const int pass = pass_.load();

    RequestRecord record;
    record.prompt_id = prompt.id;
    record.start_time_s = virtual_start_s;
    record.token_source = TokenSource::reported;

    const double latency = script_->latency_s(pass, prompt.id);
    const int failures = script_->failures_before_success(pass, prompt.id);
    const int max_attempts = config_.max_retries + 1;

    double elapsed = 0.0;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        record.attempt_count = attempt;
        if (latency > config_.request_timeout_s) {
            elapsed += config_.request_timeout_s;  // simulated timeout
            continue;
        }
        elapsed += latency;
        if (attempt <= failures) continue;  // scripted failure
        record.prompt_tokens = script_->prompt_tokens(pass, prompt.id);
        record.completion_tokens = script_->completion_tokens(pass, prompt.id);
        record.status = attempt > 1 ? RequestStatus::retried_ok : RequestStatus::ok;
        record.wall_time_s = elapsed;
        return record;
    }

    record.status = RequestStatus::failed;
    record.wall_time_s = elapsed;
    return record;
}

RequestRecord send_chat(const EndpointConfig& config, const PromptSpec& prompt) {
    return EndpointClient(config).send_chat(prompt);
}

}  // namespace tokenjoule
