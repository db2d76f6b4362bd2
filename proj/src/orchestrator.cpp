// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/orchestrator.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <thread>

#include <nlohmann/json.hpp>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/hash.hpp"

namespace tokenjoule {

namespace {

bool is_scripted_url(const std::string& base_url) {
    return base_url.rfind("mock:", 0) == 0;
}

std::pair<int, int> parse_slot(const std::string& slot) {
    int hh = -1, mm = -1;
    if (slot.size() == 5 && slot[2] == ':') {
        std::from_chars(slot.data(), slot.data() + 2, hh);
        std::from_chars(slot.data() + 3, slot.data() + 5, mm);
    }
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59)
        throw ConfigError("bad schedule slot (expected HH:MM): " + slot);
    return {hh, mm};
}

void sleep_until_slot(const std::string& slot) {
    const auto [hh, mm] = parse_slot(slot);
    const std::time_t now = std::time(nullptr);
    std::tm local{};
    localtime_r(&now, &local);
    local.tm_hour = hh;
    local.tm_min = mm;
    local.tm_sec = 0;
    std::time_t target = std::mktime(&local);
    if (target <= now) target += 24 * 3600;  // next occurrence is tomorrow
    std::this_thread::sleep_for(std::chrono::seconds(target - now));
}

struct PassSpan {
    double first_start = 0.0;
    double last_end = 0.0;
};

PassSpan request_span(const std::vector<RequestRecord>& requests) {
    PassSpan span;
    span.first_start = requests.front().start_time_s;
    span.last_end = requests.front().start_time_s + requests.front().wall_time_s;
    for (const RequestRecord& r : requests) {
        span.first_start = std::min(span.first_start, r.start_time_s);
        span.last_end = std::max(span.last_end, r.start_time_s + r.wall_time_s);
    }
    return span;
}

EnergyMeasurement sum_energy(std::vector<PowerTrace> traces, double t0, double t1,
                             EnergySource source, bool rebase) {
    if (traces.empty()) throw DataError("no power traces to integrate");
    double total_wh = 0.0;
    std::string devices;
    for (PowerTrace& trace : traces) {
        if (rebase) trace = rebase_trace(trace, t0);
        total_wh += integrate_energy(trace, t0, t1).energy_wh;
        if (!devices.empty()) devices += '+';
        devices += trace.device_id;
    }
    EnergyMeasurement m;
    m.energy_wh = total_wh;
    m.t_start_s = t0;
    m.t_end_s = t1;
    m.device_id = devices;
    m.source = source;
    return m;
}

}  // namespace

std::string_view to_string(TokenPolicy p) {
    return p == TokenPolicy::completion_only ? "completion_only" : "prompt_and_completion";
}

TokenPolicy token_policy_from_string(std::string_view s) {
    if (s == "completion_only") return TokenPolicy::completion_only;
    if (s == "prompt_and_completion") return TokenPolicy::prompt_and_completion;
    throw ParseError("unknown token policy: " + std::string(s));
}

void validate_run_config(const RunConfig& config) {
    validate_endpoint_config(config.endpoint);
    if (config.passes < 1) throw ConfigError("passes must be at least 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be at least 1");
    for (const std::string& slot : config.schedule) parse_slot(slot);

    const bool local = config.endpoint.deployment_kind == DeploymentKind::local;
    const bool has_source = config.sampler.has_value() || config.replay.has_value();
    if (local && !has_source)
        throw ConfigError("local runs need a power sampler or a replay trace");
    if (local && config.sampler && config.replay)
        throw ConfigError("configure either a live sampler or a replay trace, not both");
    if (!local && has_source)
        throw ConfigError("API runs must not configure power sampling");
    if (config.sampler && is_scripted_url(config.endpoint.base_url))
        throw ConfigError("scripted endpoints run on a virtual timeline; use a replay trace");
}

std::string config_checksum(const RunConfig& config) {
    // Canonical sorted-key JSON over everything that shapes the workload.
    // The api_key never participates; neither does the pass count, which is
    // an experiment extent that resume may grow.
    nlohmann::json j{
        {"suite_ref", config.suite_ref},
        {"endpoint_name", config.endpoint_name},
        {"endpoint",
         {{"base_url", config.endpoint.base_url},
          {"model_id", config.endpoint.model_id},
          {"deployment_kind", std::string(to_string(config.endpoint.deployment_kind))},
          {"temperature", config.endpoint.temperature},
          {"sampling_seed", config.endpoint.sampling_seed},
          {"request_timeout_s", config.endpoint.request_timeout_s},
          {"max_retries", config.endpoint.max_retries},
          {"fallback_tokenizer", config.endpoint.fallback_tokenizer}}},
        {"gpu_name", config.gpu_name ? nlohmann::json(*config.gpu_name) : nlohmann::json()},
        {"batch_size", config.batch_size},
        {"schedule", config.schedule},
        {"sampler", config.sampler ? nlohmann::json{{"command", config.sampler->command},
                                                    {"period_s", config.sampler->period_s}}
                                   : nlohmann::json()},
        {"replay", config.replay ? nlohmann::json(config.replay->trace_csv.string())
                                 : nlohmann::json()},
        {"token_policy", std::string(to_string(config.token_policy))},
    };
    return sha256_hex(j.dump());
}

RunRecord execute_pass(const BenchmarkSuite& suite, const RunConfig& config, int run_index) {
    return execute_pass(suite, config, run_index, {});
}

RunRecord execute_pass(const BenchmarkSuite& suite, const RunConfig& config, int run_index,
                       const std::function<void(int, const std::vector<PowerTrace>&)>& trace_sink) {
    validate_run_config(config);
    if (!config.suite_ref.empty() && config.suite_ref != suite.checksum)
        throw IntegrityError("suite checksum does not match config.suite_ref");

    EndpointClient client(config.endpoint);
    client.begin_pass(run_index);

    RunRecord record;
    record.run_index = run_index;
    record.config_ref = config_checksum(config);
    const auto& prompts = suite.prompts;
    record.requests.resize(prompts.size());

    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const bool local = config.endpoint.deployment_kind == DeploymentKind::local;

    if (client.scripted()) {
        // Virtual timeline: all requests of a window start together; the
        // next window starts when the slowest request of this one ends.
        record.started_at = "1970-01-01T00:00:00Z";
        double cursor = 0.0;
        for (std::size_t w = 0; w < prompts.size(); w += batch) {
            const std::size_t end = std::min(w + batch, prompts.size());
            double window_end = cursor;
            for (std::size_t i = w; i < end; ++i) {
                record.requests[i] = client.simulate_chat(prompts[i], cursor);
                window_end = std::max(window_end, cursor + record.requests[i].wall_time_s);
            }
            cursor = window_end;
        }
    } else {
        record.started_at = utc_now_iso8601();

        // Live sampling starts before the first request (fail fast) and
        // stops only after the last one, so the trace covers the pass span.
        std::unique_ptr<SamplingSession> session;
        if (config.sampler) session = SamplingSession::start(*config.sampler);

        for (std::size_t w = 0; w < prompts.size(); w += batch) {
            const std::size_t end = std::min(w + batch, prompts.size());
            std::vector<std::thread> window;
            window.reserve(end - w);
            for (std::size_t i = w; i < end; ++i) {
                window.emplace_back([&client, &prompts, &record, i] {
                    record.requests[i] = client.send_chat(prompts[i]);
                });
            }
            for (std::thread& t : window) t.join();
            // No artificial idle between windows.
        }
        if (session) {
            const PassSpan span = request_span(record.requests);
            std::vector<PowerTrace> traces = session->stop();
            if (trace_sink) trace_sink(run_index, traces);
            record.energy = sum_energy(std::move(traces), span.first_start, span.last_end,
                                       EnergySource::sampled, /*rebase=*/false);
        }
    }

    const PassSpan span = request_span(record.requests);
    record.total_wall_time_s = span.last_end - span.first_start;

    long total = 0;
    bool all_ok = true;
    for (const RequestRecord& r : record.requests) {
        if (r.status == RequestStatus::failed) {
            all_ok = false;
            continue;
        }
        total += r.completion_tokens;
        if (config.token_policy == TokenPolicy::prompt_and_completion) total += r.prompt_tokens;
    }
    record.total_tokens = total;
    record.valid = all_ok;

    if (local && config.replay) {
        record.energy = sum_energy(read_trace_csv_file(config.replay->trace_csv), span.first_start,
                                   span.last_end, EnergySource::replayed, /*rebase=*/true);
    }
    return record;
}

std::vector<RunRecord> execute_experiment(const BenchmarkSuite& suite, const RunConfig& config,
                                          const ExperimentOptions& options) {
    validate_run_config(config);
    if (options.resume_from < 0 || options.resume_from > config.passes)
        throw ConfigError("resume offset outside 0..passes");

    std::vector<RunRecord> records;
    records.reserve(static_cast<std::size_t>(config.passes - options.resume_from));
    for (int k = options.resume_from; k < config.passes; ++k) {
        if (!config.schedule.empty()) {
            // Passes dispatch round-robin over the configured slots.
            const std::string& slot = config.schedule[static_cast<std::size_t>(k) %
                                                      config.schedule.size()];
            if (options.wait_for_slot) {
                options.wait_for_slot(k, slot);
            } else if (!is_scripted_url(config.endpoint.base_url)) {
                sleep_until_slot(slot);
            }
        }
        RunRecord record = execute_pass(suite, config, k, options.on_traces);
        if (options.on_pass_complete) options.on_pass_complete(record);
        records.push_back(std::move(record));
    }
    return records;
}

}  // namespace tokenjoule
