// SPDX-License-Identifier: Apache-2.0

#include "tokenjoule/metrics.hpp"

#include <cmath>

#include "tokenjoule/errors.hpp"

namespace tokenjoule {

AggregateStats aggregate(std::span<const double> values, std::string unit) {
    if (values.empty()) throw DomainError("cannot aggregate an empty list");
    // Welford's update; the tests cross-check against a two-pass oracle.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double x : values) {
        ++k;
        const double d = x - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (x - mean);
    }
    AggregateStats s;
    s.mean = mean;
    s.n = values.size();
    s.unit = std::move(unit);
    if (values.size() >= 2) s.sd = std::sqrt(m2 / static_cast<double>(values.size() - 1));
    return s;
}

AggregateStats ratio_stats(const AggregateStats& numer, const AggregateStats& denom,
                           std::string unit) {
    if (denom.mean == 0.0) throw DomainError("ratio_stats: zero denominator mean");
    AggregateStats s;
    s.mean = numer.mean / denom.mean;
    s.n = std::min(numer.n, denom.n);
    s.unit = std::move(unit);
    if (numer.sd && denom.sd && numer.mean != 0.0) {
        const double rel_n = *numer.sd / numer.mean;
        const double rel_d = *denom.sd / denom.mean;
        s.sd = std::abs(s.mean) * std::sqrt(rel_n * rel_n + rel_d * rel_d);
    }
    return s;
}

RunDerived derive_run(const RunRecord& run, bool require_energy) {
    if (!run.valid) throw DataError("cannot derive metrics from an invalid run");
    if (run.total_tokens <= 0) throw DataError("degenerate run: zero tokens");
    if (run.total_wall_time_s <= 0) throw DataError("degenerate run: zero wall time");
    if (require_energy && !run.energy)
        throw DataError("missing energy measurement on a local run");

    RunDerived d;
    d.run_index = run.run_index;
    d.time_per_token_s = run.total_wall_time_s / static_cast<double>(run.total_tokens);
    if (run.energy) {
        d.power_w = run.energy->energy_wh / (run.total_wall_time_s / 3600.0);
        d.energy_per_token_mwh =
            run.energy->energy_wh / static_cast<double>(run.total_tokens) * 1000.0;
    }
    return d;
}

double mean_power(std::span<const RunDerived> runs) {
    if (runs.size() < 2) throw DataError("mean power needs at least 2 runs");
    double sum = 0.0;
    for (const RunDerived& r : runs) {
        if (!r.power_w) throw DataError("run " + std::to_string(r.run_index) + " lacks power");
        sum += *r.power_w;
    }
    return sum / static_cast<double>(runs.size());
}

ExperimentSummary summarize_runs(std::string id, std::string model, DeploymentKind deployment,
                                 std::optional<std::string> gpu, std::span<const RunRecord> runs) {
    std::vector<double> times, tokens, t_token, energy, e_token, power;
    for (const RunRecord& run : runs) {
        if (!run.valid) continue;
        const RunDerived d = derive_run(run, deployment == DeploymentKind::local);
        times.push_back(run.total_wall_time_s);
        tokens.push_back(static_cast<double>(run.total_tokens));
        t_token.push_back(d.time_per_token_s);
        if (d.power_w) power.push_back(*d.power_w);
        if (d.energy_per_token_mwh) e_token.push_back(*d.energy_per_token_mwh);
        if (run.energy) energy.push_back(run.energy->energy_wh);
    }
    if (times.empty()) throw DataError("experiment has no valid runs");

    ExperimentSummary s;
    s.id = std::move(id);
    s.model = std::move(model);
    s.deployment = deployment;
    s.gpu = std::move(gpu);
    s.n_runs = times.size();
    s.sufficient = times.size() >= 2;
    s.time_s = aggregate(times, "s");
    s.tokens = aggregate(tokens, "tokens");
    s.t_token_s = aggregate(t_token, "s/token");
    if (!energy.empty()) s.energy_wh = aggregate(energy, "Wh");
    if (!e_token.empty()) s.e_token_mwh = aggregate(e_token, "mWh/token");
    if (!power.empty()) s.power_w = aggregate(power, "W");
    return s;
}

}  // namespace tokenjoule
