# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the Python bindings."""

import math
import os

import pytest

import tokenjoule as tj


def test_suite_generation_is_deterministic():
    a = tj.generate_suite(seed=7, count=100)
    b = tj.generate_suite(seed=7, count=100)
    assert a.checksum == b.checksum
    assert len(a.prompts) == 100
    categories = {}
    for p in a.prompts:
        categories[p.category] = categories.get(p.category, 0) + 1
    assert set(categories.values()) == {25}
    budgets = {p.target_tokens for p in a.prompts}
    assert budgets == {2048, 8192}


def test_count_tokens_whitespace():
    assert tj.count_tokens("") == 0
    assert tj.count_tokens("one two three") == 4
    with pytest.raises(tj.TokenjouleError):
        tj.count_tokens("text", "no-such-tokenizer")


def test_constant_power_integration():
    ts = [0.1 * i for i in range(18201)]
    trace = tj.PowerTrace("gpu0", ts, [360.0] * len(ts), 0.1)
    m = tj.integrate_energy(trace, 0.0, 1820.0)
    assert math.isclose(m.energy_wh, 182.0, rel_tol=1e-9)


def test_aggregate_stats():
    s = tj.aggregate([1.0, 2.0, 3.0, 4.0])
    assert math.isclose(s.mean, 2.5)
    assert math.isclose(s.sd, 1.2909944487358056)
    single = tj.aggregate([5.0])
    assert single.sd is None


def test_estimators_reproduce_reference_values():
    est = tj.estimate_token_proxy(
        tj.AggregateStats(mean=0.904, sd=0.009, n=10),
        tj.AggregateStats(mean=111272.0, sd=6351.0, n=10),
    )
    assert math.isclose(est.total_wh, 100.60, rel_tol=0.01)
    assert math.isclose(est.sd_wh, 6.00, rel_tol=0.10)

    assert tj.gap_pct_rounded(296.0, 182.0) == 39

    catalog = tj.default_catalog()
    h100_pci = tj.find_gpu(catalog, "H100-PCI")
    assert h100_pci.tdp_w == 400
    assert math.isclose(tj.tdp_energy(h100_pci, 1820.0).total_wh, 182.0, rel_tol=1e-9)


def test_fleet_match_from_reference_dataset():
    experiments = tj.reference_experiments()
    assert len(experiments) == 16

    nemo_local = {
        e.gpu: e.t_token_s
        for e in experiments
        if e.model == "Mistral-NeMo" and e.deployment == "local"
    }
    assert len(nemo_local) == 6
    clusters = tj.build_clusters(nemo_local, tj.default_catalog())
    assert [c.label for c in clusters] == ["A", "H"]

    api_free = next(
        e for e in experiments if e.model == "Mistral-NeMo" and e.deployment == "api_free"
    )
    match = tj.match_api(api_free.t_token_s, clusters)
    assert match.verdict == "H"


def test_shipped_fixture_loads():
    fixture_dir = os.environ.get("TOKENJOULE_FIXTURE_DIR")
    if not fixture_dir:
        pytest.skip("TOKENJOULE_FIXTURE_DIR not set")
    experiments = tj.reference_experiments(os.path.join(fixture_dir, "reference_dataset.json"))
    assert len(experiments) == 16
