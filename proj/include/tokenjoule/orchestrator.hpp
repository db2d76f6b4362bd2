// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tokenjoule/client.hpp"
#include "tokenjoule/power.hpp"
#include "tokenjoule/suite.hpp"

namespace tokenjoule {

enum class TokenPolicy { completion_only, prompt_and_completion };

std::string_view to_string(TokenPolicy p);
TokenPolicy token_policy_from_string(std::string_view s);

/// A pre-recorded trace substituted for live sampling, so the full pipeline
/// runs without GPUs. Timestamps are re-based onto the start of each pass.
struct ReplayConfig {
    std::filesystem::path trace_csv;
};

/// One experiment: N independent passes over the fixed prompt sequence.
struct RunConfig {
    std::string suite_ref;  // checksum of the BenchmarkSuite
    EndpointConfig endpoint;
    std::string endpoint_name = "default";
    std::optional<std::string> gpu_name;  // catalog name, local deployments
    int passes = 10;
    int batch_size = 8;
    std::vector<std::string> schedule;  // optional "HH:MM" time-of-day slots
    std::optional<SamplerConfig> sampler;
    std::optional<ReplayConfig> replay;
    TokenPolicy token_policy = TokenPolicy::completion_only;
};

/// Checks cross-field invariants: passes/batch positive, local runs carry a
/// sampler or replay trace, API runs carry neither, schedule slots parse.
void validate_run_config(const RunConfig& config);

/// SHA-256 of the canonical config serialization (api_key excluded).
std::string config_checksum(const RunConfig& config);

/// One full benchmark pass. `total_tokens` follows the configured counting
/// policy (completion tokens only, by default) over ok/retried_ok requests.
struct RunRecord {
    int run_index = 0;
    std::string config_ref;
    std::vector<RequestRecord> requests;  // one per prompt, suite order
    double total_wall_time_s = 0.0;
    long total_tokens = 0;
    std::optional<EnergyMeasurement> energy;
    std::string started_at;  // ISO-8601 UTC; epoch constant in simulation
    bool valid = true;
};

struct ExperimentOptions {
    int resume_from = 0;  // passes already completed and persisted
    std::function<void(const RunRecord&)> on_pass_complete;
    /// Receives the raw power traces of each live-sampled pass.
    std::function<void(int run_index, const std::vector<PowerTrace>&)> on_traces;
    /// Called before each pass when a schedule is configured. When absent,
    /// real endpoints sleep until the slot's next occurrence (local time);
    /// scripted endpoints never wait.
    std::function<void(int run_index, const std::string& slot)> wait_for_slot;
};

/// Issues the suite in windows of batch_size concurrent requests; the next
/// window starts only when the previous one completed. Local runs integrate
/// board energy over [first request start, last request end].
RunRecord execute_pass(const BenchmarkSuite& suite, const RunConfig& config, int run_index);

/// As above, additionally handing live traces to `trace_sink` when set.
RunRecord execute_pass(const BenchmarkSuite& suite, const RunConfig& config, int run_index,
                       const std::function<void(int, const std::vector<PowerTrace>&)>& trace_sink);

/// Runs `config.passes` sequential passes, dispatching them round-robin over
/// the schedule slots when configured and reporting each completed pass to
/// `options.on_pass_complete` (crash-resumable persistence hook).
std::vector<RunRecord> execute_experiment(const BenchmarkSuite& suite, const RunConfig& config,
                                          const ExperimentOptions& options = {});

}  // namespace tokenjoule
