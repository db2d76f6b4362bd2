// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/fleet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "tokenjoule/errors.hpp"

namespace tokenjoule {

namespace {

constexpr std::string_view kCatalogHeader =
    "name,vram_gb,tdp_w,opt_low_w,opt_high_w,generation,form_factor";

int parse_int(std::string_view s, std::size_t line, const char* what) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError(std::string("bad ") + what + " value: " + std::string(s), line);
    return v;
}

void validate_gpu(const GpuSpec& gpu, std::size_t line) {
    if (gpu.vram_gb <= 0) throw ParseError("vram_gb must be positive for " + gpu.name, line);
    if (!(0 < gpu.opt_low_w && gpu.opt_low_w <= gpu.opt_high_w && gpu.opt_high_w <= gpu.tdp_w))
        throw ParseError("load range must satisfy 0 < low <= high <= tdp for " + gpu.name, line);
}

}  // namespace

std::string_view to_string(GpuGeneration g) {
    return g == GpuGeneration::ampere ? "ampere" : "hopper";
}

std::string_view to_string(FormFactor f) {
    return f == FormFactor::sxm ? "sxm" : "pcie";
}

GpuGeneration generation_from_string(std::string_view s) {
    if (s == "ampere") return GpuGeneration::ampere;
    if (s == "hopper") return GpuGeneration::hopper;
    throw ParseError("unknown GPU generation: " + std::string(s));
}

FormFactor form_factor_from_string(std::string_view s) {
    if (s == "sxm") return FormFactor::sxm;
    if (s == "pcie") return FormFactor::pcie;
    throw ParseError("unknown form factor: " + std::string(s));
}

std::string generation_label(GpuGeneration g) {
    return g == GpuGeneration::ampere ? "A" : "H";
}

GpuCatalog default_catalog() {
    return {
        {"A100-40GB", 40, 400, 340, 380, GpuGeneration::ampere, FormFactor::sxm},
        {"A100-80GB", 80, 400, 340, 380, GpuGeneration::ampere, FormFactor::sxm},
        {"A100-PCI", 40, 250, 213, 238, GpuGeneration::ampere, FormFactor::pcie},
        {"H100", 80, 700, 595, 665, GpuGeneration::hopper, FormFactor::sxm},
        {"H100-PCI", 94, 400, 340, 380, GpuGeneration::hopper, FormFactor::pcie},
        {"H200", 140, 700, 595, 665, GpuGeneration::hopper, FormFactor::sxm},
    };
}

GpuCatalog load_catalog(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty catalog file", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCatalogHeader) throw ParseError("bad catalog header: " + line, lineno);

    GpuCatalog catalog;
    std::set<std::string> names;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            const std::size_t comma = rest.find(',');
            fields.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (fields.size() != 7) throw ParseError("expected 7 catalog fields", lineno);
        GpuSpec gpu;
        gpu.name = std::string(fields[0]);
        gpu.vram_gb = parse_int(fields[1], lineno, "vram_gb");
        gpu.tdp_w = parse_int(fields[2], lineno, "tdp_w");
        gpu.opt_low_w = parse_int(fields[3], lineno, "opt_low_w");
        gpu.opt_high_w = parse_int(fields[4], lineno, "opt_high_w");
        gpu.generation = generation_from_string(fields[5]);
        gpu.form_factor = form_factor_from_string(fields[6]);
        validate_gpu(gpu, lineno);
        if (!names.insert(gpu.name).second)
            throw ParseError("duplicate GPU name: " + gpu.name, lineno);
        catalog.push_back(std::move(gpu));
    }
    if (catalog.empty()) throw ParseError("catalog has no rows");
    return catalog;
}

GpuCatalog load_catalog_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read catalog file: " + path.string());
    return load_catalog(in);
}

void write_catalog_csv(std::ostream& out, const GpuCatalog& catalog) {
    out << kCatalogHeader << '\n';
    for (const GpuSpec& gpu : catalog) {
        out << gpu.name << ',' << gpu.vram_gb << ',' << gpu.tdp_w << ',' << gpu.opt_low_w << ','
            << gpu.opt_high_w << ',' << to_string(gpu.generation) << ','
            << to_string(gpu.form_factor) << '\n';
    }
}

const GpuSpec& find_gpu(const GpuCatalog& catalog, std::string_view name) {
    for (const GpuSpec& gpu : catalog) {
        if (gpu.name == name) return gpu;
    }
    throw CatalogError("GPU not in catalog: " + std::string(name));
}

bool has_gpu(const GpuCatalog& catalog, std::string_view name) {
    return std::any_of(catalog.begin(), catalog.end(),
                       [&](const GpuSpec& g) { return g.name == name; });
}

std::vector<ClusterStats> build_clusters(const std::map<std::string, AggregateStats>& local_t_token,
                                         const GpuCatalog& catalog) {
    struct Member {
        std::string name;
        AggregateStats stats;
    };
    std::map<GpuGeneration, std::vector<Member>> groups;
    for (const auto& [name, stats] : local_t_token) {
        const GpuSpec& gpu = find_gpu(catalog, name);  // CatalogError if unknown
        groups[gpu.generation].push_back({name, stats});
    }

    std::vector<ClusterStats> clusters;
    for (auto& [generation, members] : groups) {
        // Catalog (release-date) order for member listing.
        std::sort(members.begin(), members.end(), [&](const Member& a, const Member& b) {
            const auto idx = [&](const std::string& n) {
                return std::find_if(catalog.begin(), catalog.end(),
                                    [&](const GpuSpec& g) { return g.name == n; }) -
                       catalog.begin();
            };
            return idx(a.name) < idx(b.name);
        });

        // Run-weighted pooled mean, then the sample sd of the pooled per-run
        // values reconstructed from per-member summaries:
        //   SS = sum_g [(n_g - 1) sd_g^2 + n_g (m_g - pooled_mean)^2]
        std::size_t total_n = 0;
        double weighted_sum = 0.0;
        for (const Member& m : members) {
            total_n += m.stats.n;
            weighted_sum += m.stats.mean * static_cast<double>(m.stats.n);
        }
        if (total_n == 0) continue;
        const double pooled_mean = weighted_sum / static_cast<double>(total_n);
        double ss = 0.0;
        for (const Member& m : members) {
            const double dev = m.stats.mean - pooled_mean;
            if (m.stats.sd) ss += static_cast<double>(m.stats.n - 1) * (*m.stats.sd) * (*m.stats.sd);
            ss += static_cast<double>(m.stats.n) * dev * dev;
        }

        ClusterStats cluster;
        cluster.label = generation_label(generation);
        for (const Member& m : members) cluster.members.push_back(m.name);
        cluster.t_token.mean = pooled_mean;
        cluster.t_token.n = total_n;
        cluster.t_token.unit = members.front().stats.unit;
        if (total_n >= 2) cluster.t_token.sd = std::sqrt(ss / static_cast<double>(total_n - 1));
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

MatchResult match_api(const AggregateStats& api_t_token, std::span<const ClusterStats> clusters) {
    if (clusters.empty()) throw DataError("no clusters to match against");
    MatchResult result;
    for (const ClusterStats& cluster : clusters) {
        const double diff = api_t_token.mean - cluster.t_token.mean;
        const double sd_api = api_t_token.sd.value_or(0.0);
        const double sd_cluster = cluster.t_token.sd.value_or(0.0);
        const double pooled_sd = std::sqrt(sd_api * sd_api + sd_cluster * sd_cluster);
        MatchEntry entry;
        entry.label = cluster.label;
        if (pooled_sd > 0.0) {
            entry.z_score = diff / pooled_sd;
            entry.within_one_sd = std::abs(diff) <= pooled_sd;
        } else if (diff == 0.0) {
            entry.z_score = 0.0;
            entry.within_one_sd = true;
        } else {
            // Zero dispersion but unequal means: no finite z, never a match.
            entry.z_score = std::numeric_limits<double>::infinity();
            entry.within_one_sd = false;
        }
        result.ranked.push_back(std::move(entry));
    }
    std::sort(result.ranked.begin(), result.ranked.end(),
              [](const MatchEntry& a, const MatchEntry& b) {
                  const double za = std::abs(a.z_score);
                  const double zb = std::abs(b.z_score);
                  if (za != zb) return za < zb;
                  return a.label < b.label;
              });
    result.verdict =
        result.ranked.front().within_one_sd ? result.ranked.front().label : std::string(kInconclusive);
    return result;
}

std::pair<std::string, double> nearest_gpu(
    const AggregateStats& api_t_token, const std::map<std::string, AggregateStats>& local_t_token) {
    if (local_t_token.empty()) throw DataError("no local stats for nearest-GPU lookup");
    std::string best;
    double best_diff = std::numeric_limits<double>::infinity();
    for (const auto& [name, stats] : local_t_token) {
        const double diff = std::abs(api_t_token.mean - stats.mean);
        if (diff < best_diff) {
            best_diff = diff;
            best = name;
        }
    }
    return {best, best_diff};
}

}  // namespace tokenjoule
