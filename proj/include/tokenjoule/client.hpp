// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "tokenjoule/suite.hpp"

namespace tokenjoule {

enum class DeploymentKind { local, api_free, api_paid };

std::string_view to_string(DeploymentKind k);
DeploymentKind deployment_kind_from_string(std::string_view s);

/// Connection and sampling parameters for one chat-completion endpoint.
/// `base_url` is either http(s)://host[:port] or "mock:<script.json>" for a
/// scripted endpoint with simulated latencies (see MockScript).
struct EndpointConfig {
    std::string base_url;
    std::optional<std::string> api_key;
    std::string model_id;
    DeploymentKind deployment_kind = DeploymentKind::local;
    double temperature = 0.7;
    std::int64_t sampling_seed = 42;
    double request_timeout_s = 300.0;
    int max_retries = 3;
    std::string fallback_tokenizer = "whitespace";
};

void validate_endpoint_config(const EndpointConfig& config);

enum class RequestStatus { ok, failed, retried_ok };
enum class TokenSource { reported, counted };

std::string_view to_string(RequestStatus s);
std::string_view to_string(TokenSource s);
RequestStatus request_status_from_string(std::string_view s);
TokenSource token_source_from_string(std::string_view s);

/// Timing and usage for a single request. `wall_time_s` covers every attempt
/// (total user-perceived latency), measured on the monotonic clock.
struct RequestRecord {
    int prompt_id = 0;
    double start_time_s = 0.0;
    double wall_time_s = 0.0;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    RequestStatus status = RequestStatus::failed;
    int attempt_count = 0;
    TokenSource token_source = TokenSource::reported;
};

/// The serialized request body: exactly one user message, no system message.
nlohmann::json chat_request_body(const EndpointConfig& config, const PromptSpec& prompt);

class MockScript;

/// Issues chat-completion requests against one endpoint. Instances hold no
/// mutable per-request state and may be shared across concurrent callers.
class EndpointClient {
  public:
    explicit EndpointClient(EndpointConfig config);
    ~EndpointClient();

    const EndpointConfig& config() const { return config_; }

    /// True when the endpoint is a scripted mock (simulated time).
    bool scripted() const { return script_ != nullptr; }

    /// Fails fast if the endpoint is unreachable (or the mock script is
    /// unreadable). Any HTTP response counts as reachable.
    void probe() const;

    /// Scripted transports key latency/usage by (pass, prompt).
    void begin_pass(int run_index) { pass_.store(run_index); }

    /// Sends one request, retrying failures up to max_retries extra attempts.
    RequestRecord send_chat(const PromptSpec& prompt) const;

    /// Scripted endpoints only: resolves the request on a virtual timeline
    /// starting at `virtual_start_s` without real waiting.
    RequestRecord simulate_chat(const PromptSpec& prompt, double virtual_start_s) const;

  private:
    RequestRecord send_http(const PromptSpec& prompt) const;

    EndpointConfig config_;
    std::shared_ptr<const MockScript> script_;
    std::atomic<int> pass_{0};
};

/// One-shot form of the operation above.
RequestRecord send_chat(const EndpointConfig& config, const PromptSpec& prompt);

}  // namespace tokenjoule
