// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tokenjoule/fleet.hpp"
#include "tokenjoule/metrics.hpp"

namespace tokenjoule {

/// Rows of the bundled reference dataset: summary measurements for two
/// models across six local GPUs and two API tiers, plus the published
/// derived figures the toolkit reproduces in its golden tests.

struct ReferenceRuntimeRow {
    std::string model;
    DeploymentKind deployment = DeploymentKind::local;
    std::optional<std::string> gpu;
    AggregateStats time_s;  // n = runs
};

struct ReferenceEnergyRow {
    std::string model;
    std::string gpu;
    long total_tokens = 0;
    AggregateStats tdp_per_token_mwh;  // as printed in the dataset
    AggregateStats tdp_total_wh;
    AggregateStats measured_per_token_mwh;
    AggregateStats measured_total_wh;
    int gap_pct = 0;
};

struct ReferenceApiTokens {
    std::string model;
    DeploymentKind deployment = DeploymentKind::api_free;
    AggregateStats tokens;
};

struct ReferenceEstimateRow {
    std::string model;
    DeploymentKind deployment = DeploymentKind::api_free;
    std::string basis;  // "measured" | "tdp"
    std::string gpu;
    double total_wh = 0.0;
    double sd_wh = 0.0;
};

struct ReferenceDataset {
    std::string version;
    std::string description;
    GpuCatalog catalog;
    std::vector<ReferenceRuntimeRow> runtimes;
    std::vector<ReferenceEnergyRow> energy;
    std::vector<ReferenceApiTokens> api_tokens;
    std::vector<ReferenceEstimateRow> estimates;
};

ReferenceDataset load_reference_dataset(std::istream& in);
ReferenceDataset load_reference_dataset_file(const std::filesystem::path& path);

/// The dataset compiled into the binary (same content as the shipped
/// fixtures/reference_dataset.json).
const ReferenceDataset& bundled_reference_dataset();
const std::string& bundled_reference_dataset_json();
const std::string& bundled_catalog_csv();

/// Canonical id of a reference experiment, e.g. "mistral-7b/local/H100-PCI"
/// or "mistral-nemo/api_free".
std::string reference_experiment_id(const std::string& model, DeploymentKind deployment,
                                    const std::optional<std::string>& gpu);

/// Turns the dataset rows into summary-only experiments addressable by id.
std::vector<Experiment> reference_experiments(const ReferenceDataset& dataset);

/// Lookup helpers; throw DataError when a row is absent.
const ReferenceEnergyRow& find_energy_row(const ReferenceDataset& dataset, const std::string& model,
                                          const std::string& gpu);
const ReferenceApiTokens& find_api_tokens(const ReferenceDataset& dataset, const std::string& model,
                                          DeploymentKind deployment);

}  // namespace tokenjoule
