// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/hash.hpp"
#include "tokenjoule/version.hpp"

namespace tokenjoule {

namespace {

std::string format_full(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Three significant figures in plain decimal notation; values above 1000
// round to integers (matching the source tables' style).
std::string format_sig3(double v) {
    if (v == 0.0) return "0";
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    const int exponent = static_cast<int>(std::floor(std::log10(std::abs(v))));
    const int decimals = std::clamp(2 - exponent, 0, 12);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::string render_cell_csv(const TableCell& cell) {
    switch (cell.kind) {
        case TableCell::Kind::text: return csv_escape(cell.text);
        case TableCell::Kind::number: return format_full(cell.number);
        case TableCell::Kind::integer: return std::to_string(cell.integer);
        case TableCell::Kind::na: return "";
    }
    return "";
}

std::string render_cell_markdown(const TableCell& cell) {
    switch (cell.kind) {
        case TableCell::Kind::text: return cell.text.empty() ? "-" : cell.text;
        case TableCell::Kind::number: return format_sig3(cell.number);
        case TableCell::Kind::integer: return std::to_string(cell.integer);
        case TableCell::Kind::na: return "n/a";
    }
    return "n/a";
}

std::string deployment_display(DeploymentKind k) {
    switch (k) {
        case DeploymentKind::local: return "Local";
        case DeploymentKind::api_free: return "Free-API";
        case DeploymentKind::api_paid: return "Paid-API";
    }
    return "?";
}

int deployment_rank(DeploymentKind k) {
    return k == DeploymentKind::local ? 0 : (k == DeploymentKind::api_free ? 1 : 2);
}

std::size_t catalog_index(const GpuCatalog& catalog, const std::optional<std::string>& gpu) {
    if (!gpu) return catalog.size();
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (catalog[i].name == *gpu) return i;
    }
    return catalog.size();
}

// Report row order: model, then deployment kind, then GPU release order.
std::vector<const Experiment*> sorted_view(std::span<const Experiment> experiments,
                                           const GpuCatalog& catalog) {
    std::vector<const Experiment*> view;
    view.reserve(experiments.size());
    for (const Experiment& e : experiments) view.push_back(&e);
    std::stable_sort(view.begin(), view.end(), [&](const Experiment* a, const Experiment* b) {
        const auto& sa = a->summary;
        const auto& sb = b->summary;
        if (sa.model != sb.model) return sa.model < sb.model;
        const int ra = deployment_rank(sa.deployment);
        const int rb = deployment_rank(sb.deployment);
        if (ra != rb) return ra < rb;
        return catalog_index(catalog, sa.gpu) < catalog_index(catalog, sb.gpu);
    });
    return view;
}

TableCell stats_sd_cell(const AggregateStats& stats) {
    return stats.sd ? TableCell::of(*stats.sd) : TableCell::na();
}

struct TdpColumns {
    double total_wh = 0.0;
    std::optional<double> total_sd_wh;
    double per_token_mwh = 0.0;
    std::optional<double> per_token_sd_mwh;
};

TdpColumns tdp_columns(const GpuSpec& gpu, const AggregateStats& time_s,
                       const AggregateStats& tokens, double sustained_factor) {
    TdpColumns cols;
    cols.total_wh = tdp_energy(gpu, time_s.mean, sustained_factor).total_wh;
    cols.per_token_mwh = tdp_per_token_mwh(gpu, time_s.mean, tokens.mean, sustained_factor);
    if (time_s.sd) {
        cols.total_sd_wh = gpu.tdp_w * sustained_factor * (*time_s.sd) / 3600.0;
        cols.per_token_sd_mwh = *cols.total_sd_wh / tokens.mean * 1000.0;
    }
    return cols;
}

AggregateStats tdp_per_token_stats(const GpuSpec& gpu, const AggregateStats& time_s,
                                   const AggregateStats& tokens, double sustained_factor) {
    const TdpColumns cols = tdp_columns(gpu, time_s, tokens, sustained_factor);
    AggregateStats s;
    s.mean = cols.per_token_mwh;
    s.sd = cols.per_token_sd_mwh;
    s.n = time_s.n;
    s.unit = "mWh/token";
    return s;
}

void append_estimate_rows(Table& table, const Experiment& api, const Experiment& basis,
                          const GpuCatalog& catalog, double sustained_factor) {
    const auto& a = api.summary;
    const auto& b = basis.summary;
    if (a.model != b.model) return;

    auto push = [&](const char* kind, const EnergyEstimate& est) {
        std::vector<TableCell> row;
        row.push_back(TableCell::of(a.model));
        row.push_back(TableCell::of(deployment_display(a.deployment)));
        row.push_back(TableCell::of(std::string(kind)));
        row.push_back(TableCell::of(a.tokens.mean));
        row.push_back(stats_sd_cell(a.tokens));
        row.push_back(est.per_token_mwh ? TableCell::of(*est.per_token_mwh) : TableCell::na());
        row.push_back(TableCell::of(est.total_wh));
        row.push_back(est.sd_wh ? TableCell::of(*est.sd_wh) : TableCell::na());
        row.push_back(b.gpu ? TableCell::of(*b.gpu) : TableCell::na());
        row.push_back(TableCell::of(b.id));
        row.push_back(TableCell::of(a.id));
        table.rows.push_back(std::move(row));
    };

    if (b.e_token_mwh) {
        EnergyEstimate m = estimate_token_proxy(*b.e_token_mwh, a.tokens);
        m.basis = {a.model, b.gpu.value_or(""), b.id, a.id};
        push("M", m);
    }
    if (b.gpu && has_gpu(catalog, *b.gpu)) {
        const GpuSpec& gpu = find_gpu(catalog, *b.gpu);
        EnergyEstimate c = estimate_token_proxy(
            tdp_per_token_stats(gpu, b.time_s, b.tokens, sustained_factor), a.tokens);
        c.basis = {a.model, gpu.name, b.id, a.id};
        push("C", c);
    }
}

nlohmann::json stats_json(const AggregateStats& s) {
    nlohmann::json j{{"mean", s.mean}, {"n", s.n}, {"unit", s.unit}};
    j["sd"] = s.sd ? nlohmann::json(*s.sd) : nlohmann::json();
    return j;
}

}  // namespace

TableCell TableCell::of(std::string s) {
    TableCell c;
    c.kind = Kind::text;
    c.text = std::move(s);
    return c;
}

TableCell TableCell::of(double v) {
    TableCell c;
    c.kind = Kind::number;
    c.number = v;
    return c;
}

TableCell TableCell::of(long v) {
    TableCell c;
    c.kind = Kind::integer;
    c.integer = v;
    return c;
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i > 0) out += ',';
        out += csv_escape(table.columns[i]);
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += render_cell_csv(row[i]);
        }
        out += '\n';
    }
    return out;
}

std::string to_markdown(const Table& table) {
    std::string out = "### " + table.name + "\n\n|";
    for (const std::string& col : table.columns) out += " " + col + " |";
    out += "\n|";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += " --- |";
    out += '\n';
    for (const auto& row : table.rows) {
        out += '|';
        for (const TableCell& cell : row) out += " " + render_cell_markdown(cell) + " |";
        out += '\n';
    }
    return out;
}

Table emit_runtime_table(std::span<const Experiment> experiments, const GpuCatalog& catalog) {
    Table table;
    table.name = "Benchmark completion time (s)";
    table.columns = {"model", "type", "gpu", "mean_s", "sd_s", "runs", "flags", "experiment_id"};
    for (const Experiment* e : sorted_view(experiments, catalog)) {
        const auto& s = e->summary;
        std::vector<TableCell> row;
        row.push_back(TableCell::of(s.model));
        row.push_back(TableCell::of(deployment_display(s.deployment)));
        row.push_back(s.gpu ? TableCell::of(*s.gpu) : TableCell::of(std::string("-")));
        row.push_back(TableCell::of(s.time_s.mean));
        row.push_back(stats_sd_cell(s.time_s));
        row.push_back(TableCell::of(static_cast<long>(s.n_runs)));
        row.push_back(TableCell::of(std::string(s.sufficient ? "" : "insufficient")));
        row.push_back(TableCell::of(s.id));
        table.rows.push_back(std::move(row));
    }
    return table;
}

Table emit_energy_table(std::span<const Experiment> experiments, const GpuCatalog& catalog,
                        double sustained_factor) {
    Table table;
    table.name = "TDP-bound vs measured board energy";
    table.columns = {"model",
                     "gpu",
                     "total_tokens",
                     "tdp_per_token_mwh",
                     "tdp_per_token_sd_mwh",
                     "tdp_total_wh",
                     "tdp_total_sd_wh",
                     "measured_per_token_mwh",
                     "measured_per_token_sd_mwh",
                     "measured_total_wh",
                     "measured_total_sd_wh",
                     "gap_pct",
                     "experiment_id"};
    for (const Experiment* e : sorted_view(experiments, catalog)) {
        const auto& s = e->summary;
        if (s.deployment != DeploymentKind::local || !s.gpu || !has_gpu(catalog, *s.gpu)) continue;
        const GpuSpec& gpu = find_gpu(catalog, *s.gpu);
        const TdpColumns tdp = tdp_columns(gpu, s.time_s, s.tokens, sustained_factor);

        std::vector<TableCell> row;
        row.push_back(TableCell::of(s.model));
        row.push_back(TableCell::of(*s.gpu));
        row.push_back(TableCell::of(s.tokens.mean));
        row.push_back(TableCell::of(tdp.per_token_mwh));
        row.push_back(tdp.per_token_sd_mwh ? TableCell::of(*tdp.per_token_sd_mwh) : TableCell::na());
        row.push_back(TableCell::of(tdp.total_wh));
        row.push_back(tdp.total_sd_wh ? TableCell::of(*tdp.total_sd_wh) : TableCell::na());
        if (s.energy_wh && s.e_token_mwh) {
            row.push_back(TableCell::of(s.e_token_mwh->mean));
            row.push_back(stats_sd_cell(*s.e_token_mwh));
            row.push_back(TableCell::of(s.energy_wh->mean));
            row.push_back(stats_sd_cell(*s.energy_wh));
            row.push_back(TableCell::of(gap_pct_rounded(s.energy_wh->mean, tdp.total_wh)));
        } else {
            for (int i = 0; i < 5; ++i) row.push_back(TableCell::na());
        }
        row.push_back(TableCell::of(s.id));
        table.rows.push_back(std::move(row));
    }
    return table;
}

Table emit_estimate_table(std::span<const Experiment> api_experiments, const Experiment& local_basis,
                          const GpuCatalog& catalog, double sustained_factor) {
    Table table;
    table.name = "Estimated API energy";
    table.columns = {"model",        "api_tier",     "basis", "tokens_mean", "tokens_sd",
                     "per_token_mwh", "total_wh",    "sd_wh", "basis_gpu",   "local_experiment",
                     "api_experiment"};
    for (const Experiment* e : sorted_view(api_experiments, catalog)) {
        if (e->summary.deployment == DeploymentKind::local) continue;
        append_estimate_rows(table, *e, local_basis, catalog, sustained_factor);
    }
    return table;
}

Table emit_boxplot_data(std::span<const Experiment> experiments, const GpuCatalog& catalog) {
    Table table;
    table.name = "Time per token series";
    table.columns = {"model", "deployment", "gpu", "cluster", "kind",
                     "run_index", "t_token_s", "sd_s", "experiment_id"};
    for (const Experiment* e : sorted_view(experiments, catalog)) {
        const auto& s = e->summary;
        std::string cluster;
        if (s.deployment == DeploymentKind::local && s.gpu && has_gpu(catalog, *s.gpu))
            cluster = generation_label(find_gpu(catalog, *s.gpu).generation);

        auto base_row = [&]() {
            std::vector<TableCell> row;
            row.push_back(TableCell::of(s.model));
            row.push_back(TableCell::of(deployment_display(s.deployment)));
            row.push_back(s.gpu ? TableCell::of(*s.gpu) : TableCell::of(std::string("-")));
            row.push_back(TableCell::of(cluster));
            return row;
        };

        if (e->runs.empty()) {
            auto row = base_row();
            row.push_back(TableCell::of(std::string("summary")));
            row.push_back(TableCell::na());
            row.push_back(TableCell::of(s.t_token_s.mean));
            row.push_back(stats_sd_cell(s.t_token_s));
            row.push_back(TableCell::of(s.id));
            table.rows.push_back(std::move(row));
            continue;
        }
        for (const RunRecord& run : e->runs) {
            if (!run.valid) continue;
            auto row = base_row();
            row.push_back(TableCell::of(std::string("run")));
            row.push_back(TableCell::of(static_cast<long>(run.run_index)));
            row.push_back(TableCell::of(run.total_wall_time_s /
                                        static_cast<double>(run.total_tokens)));
            row.push_back(TableCell::na());
            row.push_back(TableCell::of(s.id));
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::map<std::string, AggregateStats> local_t_token_stats(std::span<const Experiment> experiments,
                                                          const std::string& model) {
    std::map<std::string, AggregateStats> out;
    for (const Experiment& e : experiments) {
        const auto& s = e.summary;
        if (s.model == model && s.deployment == DeploymentKind::local && s.gpu && s.sufficient)
            out[*s.gpu] = s.t_token_s;
    }
    return out;
}

std::string_view match_caveat() {
    return "A time-per-token match identifies a plausible GPU generation; it does not imply "
           "that both deployments consume the same energy per token. Server-side batching, "
           "parallelism or model revisions can shift the runtime-energy trade-off.";
}

ReportBundle build_report(std::span<const Experiment> experiments, const GpuCatalog& catalog,
                          const ReportOptions& options) {
    ReportBundle bundle;
    bundle.runtime = emit_runtime_table(experiments, catalog);
    bundle.energy = emit_energy_table(experiments, catalog, options.sustained_factor);
    bundle.boxplot = emit_boxplot_data(experiments, catalog);

    Table estimates;
    estimates.name = "Estimated API energy";
    estimates.columns = {"model",        "api_tier",  "basis", "tokens_mean", "tokens_sd",
                         "per_token_mwh", "total_wh", "sd_wh", "basis_gpu",   "local_experiment",
                         "api_experiment"};

    bundle.matches = nlohmann::json::array();
    for (const Experiment* e : sorted_view(experiments, catalog)) {
        const auto& api = e->summary;
        if (api.deployment == DeploymentKind::local) continue;

        const auto local_stats = local_t_token_stats(experiments, api.model);
        nlohmann::json entry{{"api_experiment", api.id},
                             {"model", api.model},
                             {"api_t_token", stats_json(api.t_token_s)},
                             {"caveat", std::string(match_caveat())}};

        std::optional<std::string> basis_gpu = options.basis_gpu;
        if (!local_stats.empty()) {
            const auto clusters = build_clusters(local_stats, catalog);
            const MatchResult match = match_api(api.t_token_s, clusters);
            nlohmann::json ranked = nlohmann::json::array();
            for (const MatchEntry& m : match.ranked) {
                ranked.push_back(nlohmann::json{{"cluster", m.label},
                                                {"z_score", m.z_score},
                                                {"within_one_sd", m.within_one_sd}});
            }
            entry["ranked"] = ranked;
            entry["verdict"] = match.verdict;
            const auto [nearest, diff] = nearest_gpu(api.t_token_s, local_stats);
            entry["nearest_gpu"] = nearest;
            entry["nearest_gpu_t_token_diff_s"] = diff;

            if (!basis_gpu) {
                // Default basis: nearest single GPU inside the verdict
                // cluster; nearest overall when the match is inconclusive.
                if (match.verdict != kInconclusive) {
                    std::map<std::string, AggregateStats> members;
                    for (const ClusterStats& c : clusters) {
                        if (c.label != match.verdict) continue;
                        for (const std::string& name : c.members) members[name] = local_stats.at(name);
                    }
                    basis_gpu = nearest_gpu(api.t_token_s, members).first;
                } else {
                    basis_gpu = nearest;
                }
            }
        } else {
            entry["verdict"] = "no-local-data";
        }

        const Experiment* basis = nullptr;
        if (basis_gpu) {
            for (const Experiment& candidate : experiments) {
                const auto& s = candidate.summary;
                if (s.model == api.model && s.deployment == DeploymentKind::local && s.gpu &&
                    *s.gpu == *basis_gpu) {
                    basis = &candidate;
                    break;
                }
            }
        }
        if (basis != nullptr) {
            entry["basis_experiment"] = basis->summary.id;
            append_estimate_rows(estimates, *e, *basis, catalog, options.sustained_factor);
            // Both estimation routes and their divergence: mean power times
            // mean API time, next to the per-token transfer.
            const auto& b = basis->summary;
            if (b.power_w && b.e_token_mwh) {
                const double via_time =
                    estimate_time_proxy(b.power_w->mean, api.time_s.mean).total_wh;
                const double via_tokens =
                    estimate_token_proxy(*b.e_token_mwh, api.tokens).total_wh;
                entry["time_proxy_wh"] = via_time;
                entry["token_proxy_wh"] = via_tokens;
                entry["route_divergence_pct"] = (via_time - via_tokens) / via_tokens * 100.0;
            }
        } else {
            entry["estimate_suppressed"] =
                "no usable local basis experiment for model " + api.model;
        }
        bundle.matches.push_back(std::move(entry));
    }
    if (!estimates.rows.empty()) bundle.estimates = std::move(estimates);

    bundle.metadata = nlohmann::json{
        {"tool_version", options.tool_version.empty() ? kVersion : options.tool_version},
        {"created_at", utc_now_iso8601()},
        {"sustained_factor", options.sustained_factor},
        {"basis_gpu_override", options.basis_gpu ? nlohmann::json(*options.basis_gpu)
                                                 : nlohmann::json()},
        {"experiments", [&] {
             nlohmann::json rows = nlohmann::json::array();
             for (const Experiment* e : sorted_view(experiments, catalog)) {
                 nlohmann::json row{{"id", e->summary.id},
                                    {"token_policy", e->summary.token_policy},
                                    {"reference", e->summary.reference}};
                 if (!e->summary.config_ref.empty()) row["config_ref"] = e->summary.config_ref;
                 if (!e->summary.suite_ref.empty()) row["suite_checksum"] = e->summary.suite_ref;
                 rows.push_back(std::move(row));
             }
             return rows;
         }()},
    };
    return bundle;
}

void write_report(const ReportBundle& bundle, const std::filesystem::path& reports_dir) {
    std::filesystem::create_directories(reports_dir);
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream out(reports_dir / name, std::ios::binary);
        if (!out) throw StoreError("cannot write report file: " + (reports_dir / name).string());
        out << content;
    };
    const std::string sd_note = "\n_sd columns are sample standard deviations (n-1)._\n";
    write("runtime_table.csv", to_csv(bundle.runtime));
    write("runtime_table.md", to_markdown(bundle.runtime) + sd_note);
    write("energy_table.csv", to_csv(bundle.energy));
    write("energy_table.md", to_markdown(bundle.energy) + sd_note);
    if (bundle.estimates) {
        write("estimate_table.csv", to_csv(*bundle.estimates));
        write("estimate_table.md", to_markdown(*bundle.estimates) + sd_note + "\n> " +
                                       std::string(match_caveat()) + "\n");
    }
    write("boxplot_data.csv", to_csv(bundle.boxplot));
    write("match.json", bundle.matches.dump(2) + "\n");
    write("metadata.json", bundle.metadata.dump(2) + "\n");
}

}  // namespace tokenjoule
