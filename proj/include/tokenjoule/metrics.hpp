// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokenjoule/orchestrator.hpp"

namespace tokenjoule {

/// Mean and sample standard deviation (n-1 denominator). With a single
/// value the sd is undefined, not zero.
struct AggregateStats {
    double mean = 0.0;
    std::optional<double> sd;
    std::size_t n = 0;
    std::string unit;
};

/// Arithmetic mean and sample sd of `values`. Empty input is a DomainError.
AggregateStats aggregate(std::span<const double> values, std::string unit = "");

/// First-order propagation for the per-run ratio numer/denom given summary
/// stats: mean of ratios approximated by ratio of means, relative sds added
/// in quadrature. Exact when the denominator is constant.
AggregateStats ratio_stats(const AggregateStats& numer, const AggregateStats& denom,
                           std::string unit = "");

/// Per-run derived quantities: P_i = E_i/T_i, T_i/N_i and E_i/N_i.
struct RunDerived {
    int run_index = 0;
    std::optional<double> power_w;
    double time_per_token_s = 0.0;
    std::optional<double> energy_per_token_mwh;
};

/// `require_energy` enforces the local-run precondition that E_i is present.
RunDerived derive_run(const RunRecord& run, bool require_energy = false);

/// Mean of per-run power draws (not total energy over total time).
double mean_power(std::span<const RunDerived> runs);

/// Aggregated view of one experiment, the unit consumed by the estimator
/// and the report writer. Reference datasets provide summaries directly;
/// recorded experiments reduce to one via summarize_runs.
struct ExperimentSummary {
    std::string id;
    std::string model;
    DeploymentKind deployment = DeploymentKind::local;
    std::optional<std::string> gpu;
    std::size_t n_runs = 0;   // valid runs only
    bool sufficient = true;   // n_runs >= 2
    AggregateStats time_s;
    AggregateStats tokens;
    AggregateStats t_token_s;
    std::optional<AggregateStats> energy_wh;
    std::optional<AggregateStats> e_token_mwh;
    std::optional<AggregateStats> power_w;
    bool reference = false;  // summary-only provenance, no per-run records
    std::string token_policy = "completion_only";
    std::string config_ref;  // recorded experiments: checksums for traceability
    std::string suite_ref;
};

ExperimentSummary summarize_runs(std::string id, std::string model, DeploymentKind deployment,
                                 std::optional<std::string> gpu, std::span<const RunRecord> runs);

/// An experiment as the report layer sees it; `runs` is empty for
/// reference (summary-only) entries.
struct Experiment {
    ExperimentSummary summary;
    std::vector<RunRecord> runs;
};

}  // namespace tokenjoule
