// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokenjoule/estimator.hpp"
#include "tokenjoule/fleet.hpp"
#include "tokenjoule/metrics.hpp"

namespace tokenjoule {

struct TableCell {
    enum class Kind { text, number, integer, na };
    Kind kind = Kind::na;
    std::string text;
    double number = 0.0;
    long integer = 0;

    static TableCell na() { return {}; }
    static TableCell of(std::string s);
    static TableCell of(double v);
    static TableCell of(long v);
    static TableCell of(int v) { return of(static_cast<long>(v)); }
};

/// A rendered result table. Rendering is deterministic: identical inputs
/// yield byte-identical CSV and markdown.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<TableCell>> rows;
};

/// Machine format: full-precision numbers (shortest round-trip form).
std::string to_csv(const Table& table);
/// Human format: 3 significant figures, "n/a" for undefined cells.
std::string to_markdown(const Table& table);

/// Per-run benchmark times, one row per experiment: (model, type, GPU,
/// mean +- sd). GPU rows keep catalog (release-date) order; rows with fewer
/// than two valid runs are flagged, not dropped.
Table emit_runtime_table(std::span<const Experiment> experiments, const GpuCatalog& catalog);

/// TDP-bound vs measured board energy for local experiments: token count,
/// per-token and total figures for both routes, and the gap as a percent of
/// the measured value. Missing energy leaves the measured columns "n/a".
Table emit_energy_table(std::span<const Experiment> experiments, const GpuCatalog& catalog,
                        double sustained_factor = kDefaultSustainedFactor);

/// API-side energy estimates: one measured-basis (M) and one TDP-basis (C)
/// row per API experiment, built from the local basis experiment's
/// per-token figures and the API token counts.
Table emit_estimate_table(std::span<const Experiment> api_experiments,
                          const Experiment& local_basis, const GpuCatalog& catalog,
                          double sustained_factor = kDefaultSustainedFactor);

/// Plot-ready time-per-token series: per-run values for recorded
/// experiments, mean +- sd for reference entries, with generation cluster
/// annotations for local rows.
Table emit_boxplot_data(std::span<const Experiment> experiments, const GpuCatalog& catalog);

struct ReportOptions {
    double sustained_factor = kDefaultSustainedFactor;
    /// Local basis GPU for the estimate table; default picks the nearest
    /// single GPU inside the matched cluster per API experiment's model.
    std::optional<std::string> basis_gpu;
    std::string tool_version;
};

struct ReportBundle {
    Table runtime;
    Table energy;
    std::optional<Table> estimates;
    Table boxplot;
    nlohmann::json matches;   // fleet verdicts per API experiment
    nlohmann::json metadata;  // timestamps live here and nowhere else
};

/// Assembles every table derivable from `experiments`. The estimate table
/// appears when at least one API experiment and one usable local basis for
/// its model are present.
ReportBundle build_report(std::span<const Experiment> experiments, const GpuCatalog& catalog,
                          const ReportOptions& options = {});

/// Writes tables as CSV + markdown, boxplot data as CSV, match results and
/// metadata as JSON. Deterministic except metadata.json.
void write_report(const ReportBundle& bundle, const std::filesystem::path& reports_dir);

/// Local time-per-token stats per GPU for one model, the fleet-matcher input.
std::map<std::string, AggregateStats> local_t_token_stats(std::span<const Experiment> experiments,
                                                          const std::string& model);

/// Advisory caveat attached to every match output.
std::string_view match_caveat();

}  // namespace tokenjoule
