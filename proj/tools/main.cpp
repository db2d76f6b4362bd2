// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tokenjoule/config.hpp"
#include "tokenjoule/errors.hpp"
#include "tokenjoule/estimator.hpp"
#include "tokenjoule/fixture.hpp"
#include "tokenjoule/fleet.hpp"
#include "tokenjoule/report.hpp"
#include "tokenjoule/store.hpp"
#include "tokenjoule/version.hpp"

namespace tj = tokenjoule;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string output_dir;
    bool verbose = false;
};

void vlog(const GlobalOptions& g, const std::string& msg) {
    if (g.verbose) std::cerr << "[tokenjoule] " << msg << "\n";
}

std::filesystem::path resolve_output_dir(const GlobalOptions& g,
                                         const std::optional<tj::ToolConfig>& config) {
    if (!g.output_dir.empty()) return g.output_dir;
    if (config) return config->output_dir;
    return "tokenjoule-out";
}

tj::ReferenceDataset load_dataset(const std::string& dataset_path) {
    if (dataset_path.empty()) return tj::bundled_reference_dataset();
    return tj::load_reference_dataset_file(dataset_path);
}

tj::GpuCatalog load_catalog_for(const std::string& catalog_flag,
                                const std::optional<tj::ToolConfig>& config) {
    if (!catalog_flag.empty()) return tj::load_catalog_file(catalog_flag);
    if (config && config->catalog_path) return tj::load_catalog_file(*config->catalog_path);
    return tj::default_catalog();
}

/// Reference ids resolve first, then recorded experiments in the store.
tj::Experiment resolve_experiment(const std::string& id, const tj::ExperimentStore& store,
                                  const tj::ReferenceDataset& dataset) {
    for (tj::Experiment& e : tj::reference_experiments(dataset)) {
        if (e.summary.id == id) return std::move(e);
    }
    if (store.has_experiment(id)) return store.load_experiment(id);
    throw tj::ConfigError("unknown experiment id: " + id);
}

/// Every usable local experiment for `model`: reference rows plus anything
/// recorded in the store. Used as matching context.
std::vector<tj::Experiment> local_context(const std::string& model,
                                          const tj::ExperimentStore& store,
                                          const tj::ReferenceDataset& dataset) {
    std::vector<tj::Experiment> out;
    for (tj::Experiment& e : tj::reference_experiments(dataset)) {
        if (e.summary.model == model && e.summary.deployment == tj::DeploymentKind::local)
            out.push_back(std::move(e));
    }
    for (const std::string& id : store.list_experiments()) {
        try {
            tj::Experiment e = store.load_experiment(id);
            if (e.summary.model == model && e.summary.deployment == tj::DeploymentKind::local)
                out.push_back(std::move(e));
        } catch (const tj::Error&) {
            // unreadable or incomplete experiment: skip as matching context
        }
    }
    return out;
}

int cmd_suite_generate(const GlobalOptions& g, const std::string& out_path, std::uint64_t seed,
                       int count) {
    const tj::BenchmarkSuite suite = tj::generate_suite(tj::default_templates(), seed, count);
    tj::save_suite(suite, out_path);
    vlog(g, "wrote " + out_path);
    std::cout << "suite: " << out_path << "\nprompts: " << suite.prompts.size()
              << "\nchecksum: " << suite.checksum << "\n";
    return 0;
}

int cmd_suite_validate(const std::string& path) {
    const tj::BenchmarkSuite suite = tj::load_suite_file(path);
    std::cout << "ok: " << suite.prompts.size() << " prompts, checksum " << suite.checksum << "\n";
    return 0;
}

int cmd_catalog_show(const tj::GpuCatalog& catalog) {
    std::ostringstream out;
    tj::write_catalog_csv(out, catalog);
    std::cout << out.str();
    return 0;
}

int cmd_catalog_validate(const std::string& path) {
    const tj::GpuCatalog catalog = tj::load_catalog_file(path);
    std::cout << "ok: " << catalog.size() << " GPUs\n";
    return 0;
}

int cmd_run(const GlobalOptions& g, const std::string& endpoint_name, std::optional<int> passes,
            std::optional<int> batch, bool resume, bool force) {
    if (g.config_path.empty()) throw tj::ConfigError("run requires --config");
    const tj::ToolConfig config = tj::load_tool_config(g.config_path);
    if (config.suite_path.empty()) throw tj::ConfigError("config has no suite path");
    const tj::BenchmarkSuite suite = tj::load_suite_file(config.suite_path);
    tj::RunConfig run = tj::make_run_config(config, endpoint_name, suite.checksum, passes, batch);

    // Fail fast on both probes before any benchmark request goes out.
    tj::EndpointClient client(run.endpoint);
    client.probe();
    if (run.sampler) tj::run_sampler_command_once(run.sampler->command, nullptr);

    tj::ExperimentStore store(resolve_output_dir(g, config));
    const int completed = store.prepare_experiment(run, suite, resume, force);
    const std::string id = tj::ExperimentStore::experiment_id(run);
    if (completed >= run.passes) {
        std::cout << "experiment " << id << " already has " << completed << " passes\n";
        return 0;
    }
    vlog(g, "experiment " + id + ", resuming at pass " + std::to_string(completed));

    tj::ExperimentOptions options;
    options.resume_from = completed;
    options.on_pass_complete = [&](const tj::RunRecord& record) {
        store.append_pass(id, record);
        std::cout << "pass " << record.run_index << ": T=" << record.total_wall_time_s
                  << " s, tokens=" << record.total_tokens
                  << (record.energy ? ", E=" + std::to_string(record.energy->energy_wh) + " Wh" : "")
                  << (record.valid ? "" : " [invalid]") << "\n";
    };
    options.on_traces = [&](int run_index, const std::vector<tj::PowerTrace>& traces) {
        store.save_traces(id, run_index, traces);
    };

    const auto records = tj::execute_experiment(suite, run, options);
    std::size_t valid = 0;
    for (const auto& r : records) valid += r.valid ? 1 : 0;
    std::cout << "experiment " << id << ": " << records.size() << " passes run, " << valid
              << " valid\n";
    if (valid + static_cast<std::size_t>(completed) < 2)
        std::cout << "warning: fewer than 2 valid runs; insufficient for aggregation\n";
    return 0;
}

int cmd_estimate(const GlobalOptions& g, const std::string& local_id, const std::string& api_id,
                 const std::string& dataset_path, const std::string& catalog_flag,
                 double sustained_factor, bool allow_model_mismatch) {
    if (!(sustained_factor >= tj::kMinSustainedFactor &&
          sustained_factor <= tj::kMaxSustainedFactor))
        throw tj::ConfigError("sustained factor must lie in [0.85, 0.95]");

    std::optional<tj::ToolConfig> config;
    if (!g.config_path.empty()) config = tj::load_tool_config(g.config_path);
    const tj::ReferenceDataset dataset = load_dataset(dataset_path);
    const tj::GpuCatalog catalog = load_catalog_for(catalog_flag, config);
    tj::ExperimentStore store(resolve_output_dir(g, config));

    const tj::Experiment local = resolve_experiment(local_id, store, dataset);
    const tj::Experiment api = resolve_experiment(api_id, store, dataset);
    if (local.summary.deployment != tj::DeploymentKind::local)
        throw tj::ConfigError(local_id + " is not a local experiment");
    if (api.summary.deployment == tj::DeploymentKind::local)
        throw tj::ConfigError(api_id + " is not an API experiment");
    if (local.summary.model != api.summary.model) {
        std::cerr << "warning: model mismatch between " << local.summary.model << " and "
                  << api.summary.model << "\n";
        if (!allow_model_mismatch)
            throw tj::ConfigError("pass --allow-model-mismatch to estimate across models");
    }

    const tj::Table table = tj::emit_estimate_table(std::span(&api, 1), local, catalog,
                                                    sustained_factor);

    // Fleet match over every usable local experiment of the API's model.
    nlohmann::json match_json{{"api_experiment", api.summary.id},
                              {"model", api.summary.model},
                              {"sustained_factor", sustained_factor},
                              {"caveat", std::string(tj::match_caveat())}};
    const auto context = local_context(api.summary.model, store, dataset);
    std::map<std::string, tj::AggregateStats> local_stats;
    for (const tj::Experiment& e : context) {
        if (e.summary.gpu && e.summary.sufficient) local_stats[*e.summary.gpu] = e.summary.t_token_s;
    }
    std::string verdict = "no-local-data";
    if (!local_stats.empty()) {
        const auto clusters = tj::build_clusters(local_stats, catalog);
        const tj::MatchResult match = tj::match_api(api.summary.t_token_s, clusters);
        verdict = match.verdict;
        nlohmann::json ranked = nlohmann::json::array();
        for (const tj::MatchEntry& m : match.ranked)
            ranked.push_back({{"cluster", m.label},
                              {"z_score", m.z_score},
                              {"within_one_sd", m.within_one_sd}});
        match_json["ranked"] = ranked;
        match_json["verdict"] = match.verdict;
        const auto [nearest, diff] = tj::nearest_gpu(api.summary.t_token_s, local_stats);
        match_json["nearest_gpu"] = nearest;
        match_json["nearest_gpu_t_token_diff_s"] = diff;
    }

    // Both estimation routes side by side, with their divergence.
    std::optional<double> via_time, via_tokens;
    if (local.summary.power_w && local.summary.e_token_mwh) {
        via_time =
            tj::estimate_time_proxy(local.summary.power_w->mean, api.summary.time_s.mean).total_wh;
        via_tokens =
            tj::estimate_token_proxy(*local.summary.e_token_mwh, api.summary.tokens).total_wh;
        match_json["time_proxy_wh"] = *via_time;
        match_json["token_proxy_wh"] = *via_tokens;
        match_json["route_divergence_pct"] = (*via_time - *via_tokens) / *via_tokens * 100.0;
    }

    tj::ExperimentStore out_store(resolve_output_dir(g, config));
    out_store.init_layout();
    const auto reports = out_store.reports_dir();
    {
        std::ofstream f(reports / "estimate_table.csv", std::ios::binary);
        f << tj::to_csv(table);
    }
    {
        std::ofstream f(reports / "estimate_table.md", std::ios::binary);
        f << tj::to_markdown(table) << "\n> " << tj::match_caveat() << "\n";
    }
    {
        std::ofstream f(reports / "match.json", std::ios::binary);
        f << match_json.dump(2) << "\n";
    }

    std::cout << "sustained-factor: " << sustained_factor << "\n";
    for (const auto& row : table.rows) {
        std::cout << row[0].text << " " << row[1].text << " " << row[2].text << ": "
                  << row[6].number << " Wh";
        if (row[7].kind == tj::TableCell::Kind::number) std::cout << " +- " << row[7].number;
        std::cout << " (basis " << row[8].text << ")\n";
    }
    if (via_time && via_tokens) {
        std::cout << "time-proxy route: " << *via_time << " Wh vs token-proxy " << *via_tokens
                  << " Wh (divergence " << (*via_time - *via_tokens) / *via_tokens * 100.0
                  << "%)\n";
    }
    std::cout << "fleet verdict: " << verdict << "\n";
    std::cout << "wrote " << (reports / "estimate_table.csv").string() << "\n";
    return 0;
}

int cmd_report(const GlobalOptions& g, const std::vector<std::string>& ids,
               const std::string& dataset_path, const std::string& catalog_flag,
               double sustained_factor, const std::string& basis_gpu) {
    std::optional<tj::ToolConfig> config;
    if (!g.config_path.empty()) config = tj::load_tool_config(g.config_path);
    const tj::ReferenceDataset dataset = load_dataset(dataset_path);
    const tj::GpuCatalog catalog = load_catalog_for(catalog_flag, config);
    tj::ExperimentStore store(resolve_output_dir(g, config));

    std::vector<tj::Experiment> experiments;
    experiments.reserve(ids.size());
    for (const std::string& id : ids) experiments.push_back(resolve_experiment(id, store, dataset));

    tj::ReportOptions options;
    options.sustained_factor = sustained_factor;
    if (!basis_gpu.empty()) options.basis_gpu = basis_gpu;
    options.tool_version = tj::kVersion;

    const tj::ReportBundle bundle = tj::build_report(experiments, catalog, options);
    store.init_layout();
    tj::write_report(bundle, store.reports_dir());
    std::cout << "wrote reports to " << store.reports_dir().string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    GlobalOptions global;

    CLI::App app{"tokenjoule: LLM inference time and GPU energy benchmark harness"};
    app.set_version_flag("--version", tj::kVersion);
    app.add_option("--config", global.config_path, "Tool configuration file (JSON)");
    app.add_option("--output-dir", global.output_dir, "Output directory (runs/, traces/, reports/)");
    app.add_flag("--verbose", global.verbose, "Verbose logging to stderr");
    app.fallthrough();  // global flags remain valid after a subcommand
    app.require_subcommand(1);

    // suite
    auto* suite_cmd = app.add_subcommand("suite", "Generate or validate the prompt workload");
    suite_cmd->require_subcommand(1);
    std::string suite_out = "suite.ndjson";
    std::uint64_t suite_seed = 7;
    int suite_count = tj::kDefaultSuiteSize;
    auto* suite_gen = suite_cmd->add_subcommand("generate", "Generate a deterministic suite");
    suite_gen->add_option("--out", suite_out, "Output path");
    suite_gen->add_option("--seed", suite_seed, "Generation seed");
    suite_gen->add_option("--count", suite_count, "Number of prompts");
    std::string suite_validate_path;
    auto* suite_val = suite_cmd->add_subcommand("validate", "Validate a suite file");
    suite_val->add_option("path", suite_validate_path, "Suite file")->required();

    // catalog
    auto* catalog_cmd = app.add_subcommand("catalog", "Inspect or validate the GPU catalog");
    catalog_cmd->require_subcommand(1);
    std::string catalog_flag;
    auto* catalog_show = catalog_cmd->add_subcommand("show", "Print the active catalog");
    catalog_show->add_option("--catalog", catalog_flag, "Catalog CSV (default: bundled)");
    std::string catalog_validate_path;
    auto* catalog_val = catalog_cmd->add_subcommand("validate", "Validate a catalog CSV");
    catalog_val->add_option("path", catalog_validate_path, "Catalog file")->required();

    // run
    auto* run_cmd = app.add_subcommand("run", "Execute the benchmark protocol against an endpoint");
    std::string run_endpoint;
    run_cmd->add_option("--endpoint", run_endpoint, "Endpoint name from the config")->required();
    std::optional<int> run_passes, run_batch;
    run_cmd->add_option("--passes", run_passes, "Override pass count");
    run_cmd->add_option("--batch", run_batch, "Override batch size");
    bool run_resume = false, run_force = false;
    run_cmd->add_flag("--resume", run_resume, "Continue a partial experiment");
    run_cmd->add_flag("--force", run_force, "Discard existing passes and restart");

    // estimate
    auto* est_cmd = app.add_subcommand("estimate", "Estimate API energy from a local experiment");
    std::string est_local, est_api, est_dataset, est_catalog;
    double est_factor = tj::kDefaultSustainedFactor;
    bool est_allow_mismatch = false;
    est_cmd->add_option("--local", est_local, "Local experiment id")->required();
    est_cmd->add_option("--api", est_api, "API experiment id")->required();
    est_cmd->add_option("--dataset", est_dataset, "Reference dataset JSON (default: bundled)");
    est_cmd->add_option("--catalog", est_catalog, "Catalog CSV (default: bundled)");
    est_cmd->add_option("--sustained-factor", est_factor, "TDP sustained-load factor [0.85, 0.95]");
    est_cmd->add_flag("--allow-model-mismatch", est_allow_mismatch,
                      "Proceed when local and API models differ");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render result tables for experiments");
    std::vector<std::string> report_ids;
    std::string report_dataset, report_catalog, report_basis;
    double report_factor = tj::kDefaultSustainedFactor;
    report_cmd->add_option("ids", report_ids, "Experiment ids")->required();
    report_cmd->add_option("--dataset", report_dataset, "Reference dataset JSON (default: bundled)");
    report_cmd->add_option("--catalog", report_catalog, "Catalog CSV (default: bundled)");
    report_cmd->add_option("--basis", report_basis, "Local basis GPU for the estimate table");
    report_cmd->add_option("--sustained-factor", report_factor,
                           "TDP sustained-load factor [0.85, 0.95]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*suite_gen) return cmd_suite_generate(global, suite_out, suite_seed, suite_count);
        if (*suite_val) return cmd_suite_validate(suite_validate_path);
        if (*catalog_show) {
            std::optional<tj::ToolConfig> config;
            if (!global.config_path.empty()) config = tj::load_tool_config(global.config_path);
            return cmd_catalog_show(load_catalog_for(catalog_flag, config));
        }
        if (*catalog_val) return cmd_catalog_validate(catalog_validate_path);
        if (*run_cmd)
            return cmd_run(global, run_endpoint, run_passes, run_batch, run_resume, run_force);
        if (*est_cmd)
            return cmd_estimate(global, est_local, est_api, est_dataset, est_catalog, est_factor,
                                est_allow_mismatch);
        if (*report_cmd)
            return cmd_report(global, report_ids, report_dataset, report_catalog, report_factor,
                              report_basis);
    } catch (const tj::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tj::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tj::IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
