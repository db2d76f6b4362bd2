// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tokenjoule/metrics.hpp"

namespace tokenjoule {

enum class GpuGeneration { ampere, hopper };
enum class FormFactor { sxm, pcie };

std::string_view to_string(GpuGeneration g);
std::string_view to_string(FormFactor f);
GpuGeneration generation_from_string(std::string_view s);
FormFactor form_factor_from_string(std::string_view s);

/// Cluster label for a generation ("A" for Ampere, "H" for Hopper).
std::string generation_label(GpuGeneration g);

struct GpuSpec {
    std::string name;
    int vram_gb = 0;
    int tdp_w = 0;
    int opt_low_w = 0;   // optimal sustained load range, watts
    int opt_high_w = 0;
    GpuGeneration generation = GpuGeneration::ampere;
    FormFactor form_factor = FormFactor::sxm;
};

/// Catalog rows keep file order, which is chronological by release date and
/// drives report row ordering.
using GpuCatalog = std::vector<GpuSpec>;

/// The six bundled entries.
GpuCatalog default_catalog();

/// Catalog file: CSV with header
/// "name,vram_gb,tdp_w,opt_low_w,opt_high_w,generation,form_factor".
GpuCatalog load_catalog(std::istream& in);
GpuCatalog load_catalog_file(const std::filesystem::path& path);
void write_catalog_csv(std::ostream& out, const GpuCatalog& catalog);

const GpuSpec& find_gpu(const GpuCatalog& catalog, std::string_view name);
bool has_gpu(const GpuCatalog& catalog, std::string_view name);

/// Per-generation pool of local time-per-token distributions.
struct ClusterStats {
    std::string label;
    std::vector<std::string> members;
    AggregateStats t_token;  // pooled over member GPUs' runs
};

/// One cluster per generation present in `local_t_token` (keyed by GPU
/// name). Pooled mean is the run-weighted mean of member means; pooled sd is
/// the sample sd of the pooled per-run values, reconstructed from the
/// per-member summary stats.
std::vector<ClusterStats> build_clusters(const std::map<std::string, AggregateStats>& local_t_token,
                                         const GpuCatalog& catalog);

struct MatchEntry {
    std::string label;
    double z_score = 0.0;
    bool within_one_sd = false;
};

/// Clusters ranked by |z|; the verdict names the best cluster only when the
/// API mean lies within one pooled sd of it, else "inconclusive".
struct MatchResult {
    std::vector<MatchEntry> ranked;
    std::string verdict;
};

constexpr std::string_view kInconclusive = "inconclusive";

/// z = (api_mean - cluster_mean) / sqrt(sd_api^2 + sd_cluster^2). A zero
/// pooled sd with unequal means ranks as no-match (infinite z).
MatchResult match_api(const AggregateStats& api_t_token, std::span<const ClusterStats> clusters);

/// Nearest single GPU by |t_token mean difference|; surfaced alongside the
/// cluster verdict so representative selection stays with the user.
std::pair<std::string, double> nearest_gpu(const AggregateStats& api_t_token,
                                           const std::map<std::string, AggregateStats>& local_t_token);

}  // namespace tokenjoule
