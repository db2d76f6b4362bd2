// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tokenjoule/metrics.hpp"
#include "tokenjoule/orchestrator.hpp"

namespace tokenjoule {

/// JSON (de)serialization for run records, used by the run logs.
nlohmann::json request_record_to_json(const RequestRecord& r);
RequestRecord request_record_from_json(const nlohmann::json& j);
nlohmann::json run_record_summary_json(const RunRecord& r);

/// Serializes one pass as newline-delimited records: one per request plus
/// one summary record.
std::string run_record_to_ndjson(const RunRecord& record);
RunRecord run_record_from_ndjson(std::istream& in);

/// Descriptive metadata persisted next to the run logs.
struct ExperimentManifest {
    std::string experiment_id;
    std::string config_ref;
    std::string suite_checksum;
    std::string endpoint_name;
    std::string model_id;
    DeploymentKind deployment = DeploymentKind::local;
    std::optional<std::string> gpu_name;
    int passes = 0;
    int batch_size = 0;
    TokenPolicy token_policy = TokenPolicy::completion_only;
    std::string created_at;
};

/// On-disk layout rooted at an output directory:
///   runs/<experiment>/manifest.json + pass_NNNN.ndjson
///   traces/<experiment>-passNNNN.csv
///   reports/   (tables, written by the report layer)
///   fixtures/  (bundled reference dataset and catalog)
class ExperimentStore {
  public:
    explicit ExperimentStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path runs_dir() const { return root_ / "runs"; }
    std::filesystem::path traces_dir() const { return root_ / "traces"; }
    std::filesystem::path reports_dir() const { return root_ / "reports"; }
    std::filesystem::path fixtures_dir() const { return root_ / "fixtures"; }

    /// Creates the directory layout and drops the bundled fixture files in
    /// fixtures/ when absent.
    void init_layout();

    static std::string experiment_id(const RunConfig& config);

    /// Prepares an experiment directory for writing. Existing experiments
    /// are refused unless `resume` (same config, continue missing passes)
    /// or `force` (wipe and restart). Returns completed pass count.
    int prepare_experiment(const RunConfig& config, const BenchmarkSuite& suite, bool resume,
                           bool force);

    /// Number of consecutive pass files already on disk.
    int completed_pass_count(const std::string& experiment_id) const;

    void append_pass(const std::string& experiment_id, const RunRecord& record);
    void save_traces(const std::string& experiment_id, int run_index,
                     std::span<const PowerTrace> traces);

    std::vector<std::string> list_experiments() const;
    bool has_experiment(const std::string& experiment_id) const;
    ExperimentManifest load_manifest(const std::string& experiment_id) const;
    std::vector<RunRecord> load_passes(const std::string& experiment_id) const;

    /// Loads runs and reduces them to a summary.
    Experiment load_experiment(const std::string& experiment_id) const;

  private:
    std::filesystem::path experiment_dir(const std::string& experiment_id) const;
    std::filesystem::path root_;
};

}  // namespace tokenjoule
