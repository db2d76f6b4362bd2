// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tokenjoule/errors.hpp"
#include "tokenjoule/estimator.hpp"
#include "tokenjoule/fixture.hpp"

#include "helpers.hpp"

using namespace tokenjoule;

namespace {

AggregateStats stats(double mean, double sd, std::size_t n = 10) {
    AggregateStats s;
    s.mean = mean;
    s.sd = sd;
    s.n = n;
    return s;
}

}  // namespace

TEST_CASE("time proxy: power times time over 3600") {
    const EnergyEstimate e = estimate_time_proxy(585.5, 718.0);
    CHECK(e.method == EstimateMethod::time_proxy);
    CHECK(e.total_wh == doctest::Approx(116.77).epsilon(1e-3));

    CHECK(estimate_time_proxy(360.0, 3600.0).total_wh == doctest::Approx(360.0));

    const double once = estimate_time_proxy(500.0, 1234.0).total_wh;
    const double twice = estimate_time_proxy(500.0, 2468.0).total_wh;
    CHECK(twice == doctest::Approx(2 * once).epsilon(1e-12));

    CHECK_THROWS_AS(estimate_time_proxy(0.0, 100.0), DomainError);
    CHECK_THROWS_AS(estimate_time_proxy(100.0, -1.0), DomainError);
}

TEST_CASE("token proxy reproduces the reference estimate rows") {
    // measured-basis rows of the bundled dataset
    const EnergyEstimate a = estimate_token_proxy(stats(0.904, 0.009), stats(111272, 6351));
    CHECK(a.total_wh == doctest::Approx(100.60).epsilon(0.01));
    REQUIRE(a.sd_wh.has_value());
    CHECK(*a.sd_wh == doctest::Approx(6.00).epsilon(0.10));

    const EnergyEstimate b = estimate_token_proxy(stats(0.56, 0.003), stats(111272, 6351));
    CHECK(b.total_wh == doctest::Approx(62.31).epsilon(0.01));

    const EnergyEstimate c = estimate_token_proxy(stats(1.17, 0.013), stats(173743, 4967));
    CHECK(c.total_wh == doctest::Approx(203.3).epsilon(0.01));

    CHECK_THROWS_AS(estimate_token_proxy(stats(0.0, 0.0), stats(100, 1)), DomainError);
}

TEST_CASE("tdp energy bound") {
    const GpuCatalog catalog = default_catalog();
    const GpuSpec& h100_pci = find_gpu(catalog, "H100-PCI");
    const GpuSpec& a100 = find_gpu(catalog, "A100-40GB");

    CHECK(tdp_energy(h100_pci, 1820.0).total_wh == doctest::Approx(182.0).epsilon(1e-9));
    CHECK(tdp_energy(a100, 2447.0).total_wh == doctest::Approx(244.7).epsilon(1e-9));
    CHECK(tdp_energy(h100_pci, 3600.0, 1.0).total_wh == doctest::Approx(400.0));
    CHECK(tdp_energy(h100_pci, 1820.0).method == EstimateMethod::tdp_bound);
    CHECK(tdp_energy(h100_pci, 1820.0).basis.gpu == "H100-PCI");

    CHECK_THROWS_AS(tdp_energy(h100_pci, 1820.0, 0.0), DomainError);
    CHECK_THROWS_AS(tdp_energy(h100_pci, 0.0), DomainError);
}

TEST_CASE("tdp per-token values land within 0.01 mWh of the reference figures") {
    const GpuCatalog catalog = default_catalog();
    CHECK(tdp_per_token_mwh(find_gpu(catalog, "H100-PCI"), 1820.0, 327674) ==
          doctest::Approx(0.56).epsilon(0.02));
    CHECK(std::abs(tdp_per_token_mwh(find_gpu(catalog, "H100-PCI"), 1820.0, 327674) - 0.56) <= 0.01);
    CHECK(std::abs(tdp_per_token_mwh(find_gpu(catalog, "A100-40GB"), 2447.0, 286219) - 0.86) <= 0.01);
    CHECK(std::abs(tdp_per_token_mwh(find_gpu(catalog, "H200"), 2018.0, 332860) - 1.06) <= 0.01);
    CHECK_THROWS_AS(tdp_per_token_mwh(find_gpu(catalog, "H200"), 2018.0, 0), DomainError);
}

TEST_CASE("gap percentage with report rounding") {
    CHECK(gap_pct(296, 182) == doctest::Approx(38.51).epsilon(1e-3));
    CHECK(gap_pct_rounded(296, 182) == 39);
    CHECK(gap_pct_rounded(435, 250) == 43);
    CHECK(gap_pct_rounded(100, 100) == 0);
    CHECK_THROWS_AS(gap_pct(0, 10), DomainError);
    CHECK_THROWS_AS(gap_pct(-5, 10), DomainError);
}

TEST_CASE("time-proxy and token-proxy agree on consistent inputs") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> e_dist(0.1, 5.0);      // mWh/token
    std::uniform_real_distribution<double> t_dist(1e-3, 1e-1);    // s/token
    std::uniform_real_distribution<double> n_dist(1e3, 1e6);      // tokens
    for (int iter = 0; iter < 200; ++iter) {
        const double e_token = e_dist(rng);
        const double t_token = t_dist(rng);
        const double n = n_dist(rng);
        // Consistent inputs: P = E_token/T_token (mWh/s -> W via *3.6).
        const double p_w = e_token * 3.6 / t_token;
        const double t_api = t_token * n;
        const double via_time = estimate_time_proxy(p_w, t_api).total_wh;
        const double via_tokens = estimate_token_proxy(stats(e_token, 0.0), stats(n, 0.0)).total_wh;
        CHECK(tjtest::approx_rel(via_time, via_tokens, 1e-9));
    }
}

TEST_CASE("both estimators are homogeneous of degree 1") {
    for (double k : {2.0, 3.0, 10.0}) {
        CHECK(tjtest::approx_rel(estimate_time_proxy(420.0, k * 777.0).total_wh,
                                 k * estimate_time_proxy(420.0, 777.0).total_wh, 1e-12));
        CHECK(tjtest::approx_rel(
            estimate_token_proxy(stats(0.9, 0.01), stats(k * 50000, 100)).total_wh,
            k * estimate_token_proxy(stats(0.9, 0.01), stats(50000, 100)).total_wh, 1e-12));
    }
}

TEST_CASE("TDP bound sits below the measured total on every reference row") {
    const ReferenceDataset& ds = bundled_reference_dataset();
    REQUIRE(ds.energy.size() == 12);
    for (const ReferenceEnergyRow& row : ds.energy) {
        const ReferenceRuntimeRow* runtime = nullptr;
        for (const ReferenceRuntimeRow& r : ds.runtimes) {
            if (r.model == row.model && r.gpu && *r.gpu == row.gpu) runtime = &r;
        }
        REQUIRE(runtime != nullptr);
        const double tdp =
            tdp_energy(find_gpu(ds.catalog, row.gpu), runtime->time_s.mean).total_wh;
        CHECK(tdp < row.measured_total_wh.mean);
    }
}
