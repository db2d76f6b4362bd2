// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/fixture.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tokenjoule/embedded_assets.hpp"
#include "tokenjoule/errors.hpp"

namespace tokenjoule {

namespace {

AggregateStats stats_from_json(const nlohmann::json& j, std::size_t n, std::string unit) {
    AggregateStats s;
    s.mean = j.at("mean").get<double>();
    s.sd = j.at("sd").get<double>();
    s.n = n;
    s.unit = std::move(unit);
    return s;
}

std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) {
        out.push_back(c == ' ' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

ReferenceDataset load_reference_dataset(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad reference dataset: ") + e.what());
    }

    ReferenceDataset ds;
    try {
        ds.version = j.at("version").get<std::string>();
        ds.description = j.value("description", "");

        for (const auto& g : j.at("gpu_catalog")) {
            GpuSpec gpu;
            gpu.name = g.at("name").get<std::string>();
            gpu.vram_gb = g.at("vram_gb").get<int>();
            gpu.tdp_w = g.at("tdp_w").get<int>();
            gpu.opt_low_w = g.at("opt_low_w").get<int>();
            gpu.opt_high_w = g.at("opt_high_w").get<int>();
            gpu.generation = generation_from_string(g.at("generation").get<std::string>());
            gpu.form_factor = form_factor_from_string(g.at("form_factor").get<std::string>());
            ds.catalog.push_back(std::move(gpu));
        }

        for (const auto& r : j.at("runtimes_s")) {
            ReferenceRuntimeRow row;
            row.model = r.at("model").get<std::string>();
            row.deployment = deployment_kind_from_string(r.at("deployment").get<std::string>());
            if (r.contains("gpu")) row.gpu = r.at("gpu").get<std::string>();
            const auto runs = r.at("runs").get<std::size_t>();
            row.time_s.mean = r.at("mean").get<double>();
            row.time_s.sd = r.at("sd").get<double>();
            row.time_s.n = runs;
            row.time_s.unit = "s";
            ds.runtimes.push_back(std::move(row));
        }

        for (const auto& r : j.at("local_energy")) {
            ReferenceEnergyRow row;
            row.model = r.at("model").get<std::string>();
            row.gpu = r.at("gpu").get<std::string>();
            row.total_tokens = r.at("total_tokens").get<long>();
            row.tdp_per_token_mwh = stats_from_json(r.at("tdp_per_token_mwh"), 10, "mWh/token");
            row.tdp_total_wh = stats_from_json(r.at("tdp_total_wh"), 10, "Wh");
            row.measured_per_token_mwh =
                stats_from_json(r.at("measured_per_token_mwh"), 10, "mWh/token");
            row.measured_total_wh = stats_from_json(r.at("measured_total_wh"), 10, "Wh");
            row.gap_pct = r.at("gap_pct").get<int>();
            ds.energy.push_back(std::move(row));
        }

        for (const auto& r : j.at("api_tokens")) {
            ReferenceApiTokens row;
            row.model = r.at("model").get<std::string>();
            row.deployment = deployment_kind_from_string(r.at("deployment").get<std::string>());
            row.tokens = stats_from_json(r.at("tokens"), 10, "tokens");
            ds.api_tokens.push_back(std::move(row));
        }

        for (const auto& r : j.at("api_estimates")) {
            ReferenceEstimateRow row;
            row.model = r.at("model").get<std::string>();
            row.deployment = deployment_kind_from_string(r.at("deployment").get<std::string>());
            row.basis = r.at("basis").get<std::string>();
            row.gpu = r.at("gpu").get<std::string>();
            row.total_wh = r.at("total_wh").get<double>();
            row.sd_wh = r.at("sd_wh").get<double>();
            ds.estimates.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad reference dataset: ") + e.what());
    }
    return ds;
}

ReferenceDataset load_reference_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read reference dataset: " + path.string());
    return load_reference_dataset(in);
}

const std::string& bundled_reference_dataset_json() {
    static const std::string json(kEmbeddedReferenceDatasetJson);
    return json;
}

const std::string& bundled_catalog_csv() {
    static const std::string csv(kEmbeddedGpuCatalogCsv);
    return csv;
}

const ReferenceDataset& bundled_reference_dataset() {
    static const ReferenceDataset ds = [] {
        std::istringstream in(bundled_reference_dataset_json());
        return load_reference_dataset(in);
    }();
    return ds;
}

std::string reference_experiment_id(const std::string& model, DeploymentKind deployment,
                                    const std::optional<std::string>& gpu) {
    std::string id = slug(model);
    if (deployment == DeploymentKind::local) {
        id += "/local/" + gpu.value_or("unknown");
    } else {
        id += "/" + std::string(to_string(deployment));
    }
    return id;
}

std::vector<Experiment> reference_experiments(const ReferenceDataset& dataset) {
    std::vector<Experiment> out;
    for (const ReferenceRuntimeRow& row : dataset.runtimes) {
        ExperimentSummary s;
        s.model = row.model;
        s.deployment = row.deployment;
        s.gpu = row.gpu;
        s.id = reference_experiment_id(row.model, row.deployment, row.gpu);
        s.n_runs = row.time_s.n;
        s.sufficient = s.n_runs >= 2;
        s.time_s = row.time_s;
        s.reference = true;

        if (row.deployment == DeploymentKind::local) {
            const ReferenceEnergyRow& energy = find_energy_row(dataset, row.model, *row.gpu);
            s.tokens.mean = static_cast<double>(energy.total_tokens);
            s.tokens.sd = 0.0;  // fixed workload: identical token count per run
            s.tokens.n = s.n_runs;
            s.tokens.unit = "tokens";
            s.energy_wh = energy.measured_total_wh;
            s.e_token_mwh = energy.measured_per_token_mwh;
            s.power_w = ratio_stats(*s.energy_wh, s.time_s, "W");
            s.power_w->mean *= 3600.0;
            if (s.power_w->sd) *s.power_w->sd *= 3600.0;
        } else {
            const ReferenceApiTokens& tokens = find_api_tokens(dataset, row.model, row.deployment);
            s.tokens = tokens.tokens;
        }
        s.t_token_s = ratio_stats(s.time_s, s.tokens, "s/token");
        out.push_back(Experiment{std::move(s), {}});
    }
    return out;
}

const ReferenceEnergyRow& find_energy_row(const ReferenceDataset& dataset, const std::string& model,
                                          const std::string& gpu) {
    for (const ReferenceEnergyRow& row : dataset.energy) {
        if (row.model == model && row.gpu == gpu) return row;
    }
    throw DataError("no energy row for " + model + " on " + gpu);
}

const ReferenceApiTokens& find_api_tokens(const ReferenceDataset& dataset, const std::string& model,
                                          DeploymentKind deployment) {
    for (const ReferenceApiTokens& row : dataset.api_tokens) {
        if (row.model == model && row.deployment == deployment) return row;
    }
    throw DataError("no API token stats for " + model);
}

}  // namespace tokenjoule
