// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/estimator.hpp"

#include <cmath>

#include "tokenjoule/errors.hpp"

namespace tokenjoule {

std::string_view to_string(EstimateMethod m) {
    switch (m) {
        case EstimateMethod::time_proxy: return "time_proxy";
        case EstimateMethod::token_proxy: return "token_proxy";
        case EstimateMethod::tdp_bound: return "tdp_bound";
    }
    throw DomainError("unknown estimate method");
}

EnergyEstimate estimate_time_proxy(double p_loc_w, double t_api_mean_s) {
    if (p_loc_w <= 0) throw DomainError("local mean power must be positive");
    if (t_api_mean_s <= 0) throw DomainError("API mean time must be positive");
    EnergyEstimate e;
    e.method = EstimateMethod::time_proxy;
    e.total_wh = p_loc_w * t_api_mean_s / 3600.0;
    return e;
}

EnergyEstimate estimate_token_proxy(const AggregateStats& e_token_mwh,
                                    const AggregateStats& n_tokens_api) {
    if (e_token_mwh.mean <= 0) throw DomainError("energy per token must be positive");
    if (n_tokens_api.mean <= 0) throw DomainError("API token count must be positive");
    EnergyEstimate e;
    e.method = EstimateMethod::token_proxy;
    e.total_wh = e_token_mwh.mean * n_tokens_api.mean / 1000.0;
    e.per_token_mwh = e_token_mwh.mean;
    if (e_token_mwh.sd && n_tokens_api.sd) {
        const double rel_e = *e_token_mwh.sd / e_token_mwh.mean;
        const double rel_n = *n_tokens_api.sd / n_tokens_api.mean;
        e.sd_wh = e.total_wh * std::sqrt(rel_e * rel_e + rel_n * rel_n);
    }
    return e;
}

EnergyEstimate tdp_energy(const GpuSpec& gpu, double duration_s, double sustained_factor) {
    if (!(sustained_factor > 0.0 && sustained_factor <= 1.0))
        throw DomainError("sustained factor must lie in (0, 1]");
    if (duration_s <= 0) throw DomainError("duration must be positive");
    EnergyEstimate e;
    e.method = EstimateMethod::tdp_bound;
    e.total_wh = gpu.tdp_w * sustained_factor * duration_s / 3600.0;
    e.basis.gpu = gpu.name;
    return e;
}

double tdp_per_token_mwh(const GpuSpec& gpu, double duration_s, double tokens,
                         double sustained_factor) {
    if (tokens <= 0) throw DomainError("token count must be positive");
    return tdp_energy(gpu, duration_s, sustained_factor).total_wh / tokens * 1000.0;
}

double gap_pct(double measured_wh, double tdp_wh) {
    if (measured_wh <= 0) throw DomainError("measured energy must be positive");
    return (measured_wh - tdp_wh) / measured_wh * 100.0;
}

int gap_pct_rounded(double measured_wh, double tdp_wh) {
    return static_cast<int>(std::llround(gap_pct(measured_wh, tdp_wh)));
}

}  // namespace tokenjoule
