// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include "tokenjoule/fleet.hpp"
#include "tokenjoule/metrics.hpp"

namespace tokenjoule {

enum class EstimateMethod { time_proxy, token_proxy, tdp_bound };

std::string_view to_string(EstimateMethod m);

/// What an estimate was derived from, for provenance in reports.
struct EstimateBasis {
    std::string model;
    std::string gpu;
    std::string local_experiment;
    std::string api_experiment;
};

struct EnergyEstimate {
    EstimateMethod method = EstimateMethod::time_proxy;
    double total_wh = 0.0;
    std::optional<double> per_token_mwh;
    std::optional<double> sd_wh;
    EstimateBasis basis;
};

constexpr double kDefaultSustainedFactor = 0.9;
constexpr double kMinSustainedFactor = 0.85;  // configurable range for the CLI surface
constexpr double kMaxSustainedFactor = 0.95;

/// API-side energy from local mean power and mean API run time:
/// total_wh = p_loc_w * t_api_mean_s / 3600.
EnergyEstimate estimate_time_proxy(double p_loc_w, double t_api_mean_s);

/// API-side energy from local energy-per-token and API token count:
/// total_wh = e_token_mwh.mean * n_tokens_api.mean / 1000, with the sd
/// propagated by first-order independence.
EnergyEstimate estimate_token_proxy(const AggregateStats& e_token_mwh,
                                    const AggregateStats& n_tokens_api);

/// TDP-based lower bound: tdp_w * sustained_factor * duration_s / 3600.
EnergyEstimate tdp_energy(const GpuSpec& gpu, double duration_s,
                          double sustained_factor = kDefaultSustainedFactor);

/// TDP-bound energy normalized per token, in mWh.
double tdp_per_token_mwh(const GpuSpec& gpu, double duration_s, double tokens,
                         double sustained_factor = kDefaultSustainedFactor);

/// Measured-vs-TDP gap as a percentage of the measured value.
double gap_pct(double measured_wh, double tdp_wh);

/// The gap rounded to an integer for reporting (half away from zero).
int gap_pct_rounded(double measured_wh, double tdp_wh);

}  // namespace tokenjoule
