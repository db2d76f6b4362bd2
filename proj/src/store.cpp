// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/fixture.hpp"
#include "tokenjoule/hash.hpp"

namespace tokenjoule {

namespace {

std::string sanitize(std::string_view s) {
    std::string out;
    for (char c : s) {
        const unsigned char u = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "endpoint" : out;
}

nlohmann::json energy_to_json(const EnergyMeasurement& m) {
    return nlohmann::json{{"energy_wh", m.energy_wh},
                          {"t_start_s", m.t_start_s},
                          {"t_end_s", m.t_end_s},
                          {"device_id", m.device_id},
                          {"source", m.source == EnergySource::sampled ? "sampled" : "replayed"}};
}

EnergyMeasurement energy_from_json(const nlohmann::json& j) {
    EnergyMeasurement m;
    m.energy_wh = j.at("energy_wh").get<double>();
    m.t_start_s = j.at("t_start_s").get<double>();
    m.t_end_s = j.at("t_end_s").get<double>();
    m.device_id = j.at("device_id").get<std::string>();
    m.source = j.at("source").get<std::string>() == "replayed" ? EnergySource::replayed
                                                               : EnergySource::sampled;
    return m;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string pass_filename(int run_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pass_%04d.ndjson", run_index);
    return buf;
}

}  // namespace

nlohmann::json request_record_to_json(const RequestRecord& r) {
    return nlohmann::json{{"type", "request"},
                          {"prompt_id", r.prompt_id},
                          {"start_time_s", r.start_time_s},
                          {"wall_time_s", r.wall_time_s},
                          {"prompt_tokens", r.prompt_tokens},
                          {"completion_tokens", r.completion_tokens},
                          {"status", std::string(to_string(r.status))},
                          {"attempt_count", r.attempt_count},
                          {"token_source", std::string(to_string(r.token_source))}};
}

RequestRecord request_record_from_json(const nlohmann::json& j) {
    RequestRecord r;
    r.prompt_id = j.at("prompt_id").get<int>();
    r.start_time_s = j.at("start_time_s").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.prompt_tokens = j.at("prompt_tokens").get<long>();
    r.completion_tokens = j.at("completion_tokens").get<long>();
    r.status = request_status_from_string(j.at("status").get<std::string>());
    r.attempt_count = j.at("attempt_count").get<int>();
    r.token_source = token_source_from_string(j.at("token_source").get<std::string>());
    return r;
}

nlohmann::json run_record_summary_json(const RunRecord& r) {
    nlohmann::json j{{"type", "pass"},
                     {"run_index", r.run_index},
                     {"config_ref", r.config_ref},
                     {"total_wall_time_s", r.total_wall_time_s},
                     {"total_tokens", r.total_tokens},
                     {"started_at", r.started_at},
                     {"valid", r.valid},
                     {"energy", nullptr}};
    if (r.energy) j["energy"] = energy_to_json(*r.energy);
    return j;
}

std::string run_record_to_ndjson(const RunRecord& record) {
    std::string out;
    for (const RequestRecord& r : record.requests) {
        out += request_record_to_json(r).dump();
        out += '\n';
    }
    out += run_record_summary_json(record).dump();
    out += '\n';
    return out;
}

RunRecord run_record_from_ndjson(std::istream& in) {
    RunRecord record;
    bool have_summary = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad run log record: ") + e.what(), lineno);
        }
        const std::string type = j.value("type", "");
        if (type == "request") {
            record.requests.push_back(request_record_from_json(j));
        } else if (type == "pass") {
            record.run_index = j.at("run_index").get<int>();
            record.config_ref = j.at("config_ref").get<std::string>();
            record.total_wall_time_s = j.at("total_wall_time_s").get<double>();
            record.total_tokens = j.at("total_tokens").get<long>();
            record.started_at = j.at("started_at").get<std::string>();
            record.valid = j.at("valid").get<bool>();
            if (!j.at("energy").is_null()) record.energy = energy_from_json(j.at("energy"));
            have_summary = true;
        } else {
            throw ParseError("unknown run log record type: " + type, lineno);
        }
    }
    if (!have_summary) throw ParseError("run log has no pass summary record");
    return record;
}

ExperimentStore::ExperimentStore(std::filesystem::path root) : root_(std::move(root)) {}

void ExperimentStore::init_layout() {
    std::filesystem::create_directories(runs_dir());
    std::filesystem::create_directories(traces_dir());
    std::filesystem::create_directories(reports_dir());
    std::filesystem::create_directories(fixtures_dir());
    const auto dataset_path = fixtures_dir() / "reference_dataset.json";
    if (!std::filesystem::exists(dataset_path))
        atomic_write(dataset_path, bundled_reference_dataset_json());
    const auto catalog_path = fixtures_dir() / "gpu_catalog.csv";
    if (!std::filesystem::exists(catalog_path)) atomic_write(catalog_path, bundled_catalog_csv());
}

std::string ExperimentStore::experiment_id(const RunConfig& config) {
    return sanitize(config.endpoint_name) + "-" + sanitize(config.endpoint.model_id) + "-" +
           config_checksum(config).substr(0, 8);
}

std::filesystem::path ExperimentStore::experiment_dir(const std::string& experiment_id) const {
    return runs_dir() / experiment_id;
}

int ExperimentStore::prepare_experiment(const RunConfig& config, const BenchmarkSuite& suite,
                                        bool resume, bool force) {
    init_layout();
    const std::string id = experiment_id(config);
    const auto dir = experiment_dir(id);

    if (std::filesystem::exists(dir)) {
        if (force) {
            std::filesystem::remove_all(dir);
        } else if (resume) {
            const ExperimentManifest manifest = load_manifest(id);
            if (manifest.config_ref != config_checksum(config))
                throw ConfigError("experiment " + id + " was recorded with a different config");
            return completed_pass_count(id);
        } else {
            throw ConfigError("experiment " + id + " already exists; use --resume or --force");
        }
    }

    std::filesystem::create_directories(dir);
    nlohmann::json manifest{
        {"experiment_id", id},
        {"config_ref", config_checksum(config)},
        {"suite_checksum", suite.checksum},
        {"endpoint_name", config.endpoint_name},
        {"model_id", config.endpoint.model_id},
        {"deployment_kind", std::string(to_string(config.endpoint.deployment_kind))},
        {"gpu_name", config.gpu_name ? nlohmann::json(*config.gpu_name) : nlohmann::json()},
        {"passes", config.passes},
        {"batch_size", config.batch_size},
        {"token_policy", std::string(to_string(config.token_policy))},
        {"created_at", utc_now_iso8601()},
    };
    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int ExperimentStore::completed_pass_count(const std::string& experiment_id) const {
    int count = 0;
    while (std::filesystem::exists(experiment_dir(experiment_id) / pass_filename(count))) ++count;
    return count;
}

void ExperimentStore::append_pass(const std::string& experiment_id, const RunRecord& record) {
    atomic_write(experiment_dir(experiment_id) / pass_filename(record.run_index),
                 run_record_to_ndjson(record));
}

void ExperimentStore::save_traces(const std::string& experiment_id, int run_index,
                                  std::span<const PowerTrace> traces) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "-pass%04d.csv", run_index);
    write_trace_csv_file(traces_dir() / (experiment_id + buf), traces);
}

std::vector<std::string> ExperimentStore::list_experiments() const {
    std::vector<std::string> out;
    if (!std::filesystem::exists(runs_dir())) return out;
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir())) {
        if (entry.is_directory()) out.push_back(entry.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool ExperimentStore::has_experiment(const std::string& experiment_id) const {
    return std::filesystem::exists(experiment_dir(experiment_id) / "manifest.json");
}

ExperimentManifest ExperimentStore::load_manifest(const std::string& experiment_id) const {
    std::ifstream in(experiment_dir(experiment_id) / "manifest.json");
    if (!in) throw StoreError("no manifest for experiment " + experiment_id);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad manifest: ") + e.what());
    }
    ExperimentManifest m;
    m.experiment_id = j.at("experiment_id").get<std::string>();
    m.config_ref = j.at("config_ref").get<std::string>();
    m.suite_checksum = j.at("suite_checksum").get<std::string>();
    m.endpoint_name = j.at("endpoint_name").get<std::string>();
    m.model_id = j.at("model_id").get<std::string>();
    m.deployment = deployment_kind_from_string(j.at("deployment_kind").get<std::string>());
    if (!j.at("gpu_name").is_null()) m.gpu_name = j.at("gpu_name").get<std::string>();
    m.passes = j.at("passes").get<int>();
    m.batch_size = j.at("batch_size").get<int>();
    m.token_policy = token_policy_from_string(j.at("token_policy").get<std::string>());
    m.created_at = j.at("created_at").get<std::string>();
    return m;
}

std::vector<RunRecord> ExperimentStore::load_passes(const std::string& experiment_id) const {
    std::vector<RunRecord> records;
    const int count = completed_pass_count(experiment_id);
    records.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::ifstream in(experiment_dir(experiment_id) / pass_filename(k));
        if (!in) throw StoreError("cannot read pass file for " + experiment_id);
        records.push_back(run_record_from_ndjson(in));
    }
    return records;
}

Experiment ExperimentStore::load_experiment(const std::string& experiment_id) const {
    const ExperimentManifest manifest = load_manifest(experiment_id);
    std::vector<RunRecord> runs = load_passes(experiment_id);
    if (runs.empty()) throw DataError("experiment " + experiment_id + " has no recorded passes");
    ExperimentSummary summary = summarize_runs(manifest.experiment_id, manifest.model_id,
                                               manifest.deployment, manifest.gpu_name, runs);
    summary.token_policy = std::string(to_string(manifest.token_policy));
    summary.config_ref = manifest.config_ref;
    summary.suite_ref = manifest.suite_checksum;
    return Experiment{std::move(summary), std::move(runs)};
}

}  // namespace tokenjoule
