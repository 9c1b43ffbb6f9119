import math

import numpy as np
import pytest

from mmcovert.dep import dep_exact_known, dep_single_modality, dep_unknown_low_snr
from mmcovert.montecarlo import (
    DetectorKind,
    McConfig,
    StrategySpec,
    estimate_dep,
    evaluate_subset,
    run_sweep,
)
from mmcovert.scenario import ModalitySpec, channel_from_gains, default_scenario, realize_channels
from mmcovert.selection import CsiLevel, Knowledge
from mmcovert.special_fn import DomainError


def single_modality(rho, L=100):
    """One-modality scenario whose Willie SNR is exactly ``rho``."""
    s = default_scenario(modalities=(ModalitySpec(1, 1e9, 1e6, 1e-3),), L=L)
    noise = s.bandwidths[0] * s.N0
    g = math.sqrt(rho * noise / s.powers[0])
    return s, channel_from_gains(s, np.array([g]), np.array([1.0]))


def test_silent_channel_is_undetectable():
    s = default_scenario()
    r = channel_from_gains(s, np.zeros(10), np.ones(10))
    est = estimate_dep(r, s, (1, 2), DetectorKind.KNOWN, McConfig(trials=1000))
    assert est.dep_hat == 1.0
    assert (est.p_fa_hat, est.p_md_hat) == (0.0, 1.0)


def test_single_modality_closed_form():
    s, r = single_modality(0.1)
    est = estimate_dep(r, s, (1,), DetectorKind.KNOWN, McConfig(trials=1_000_000, seed=3))
    assert est.dep_hat == pytest.approx(dep_single_modality(0.1, 100), abs=0.005)
    assert est.dep_hat == pytest.approx(est.p_fa_hat + est.p_md_hat, abs=1e-12)


def test_unknown_and_low_snr_agree_at_low_snr():
    s = default_scenario(d_W=5000.0)
    r = realize_channels(s, 1, 0)
    assert r.rho_W.max() <= 1e-3
    mc = McConfig(trials=200_000, seed=4)
    a = estimate_dep(r, s, (4, 5, 6), DetectorKind.UNKNOWN, mc)
    b = estimate_dep(r, s, (4, 5, 6), DetectorKind.LOW_SNR, mc)
    assert abs(a.dep_hat - b.dep_hat) <= 0.01


def test_thread_count_does_not_change_bits():
    s = default_scenario(d_W=60.0)
    r = realize_channels(s, 2, 0)
    base = McConfig(trials=50_000, seed=9, block_size=4096)
    one = estimate_dep(r, s, (2, 3), DetectorKind.UNKNOWN, base)
    four = estimate_dep(r, s, (2, 3), DetectorKind.UNKNOWN,
                        McConfig(trials=50_000, seed=9, block_size=4096, threads=4))
    assert one == four


def test_raw_samples_agree_with_energy_draws():
    s = default_scenario(modalities=default_scenario().modalities[:3], d_W=40.0)
    r = realize_channels(s, 5, 0)
    fast = estimate_dep(r, s, (2,), DetectorKind.KNOWN, McConfig(trials=20_000, seed=1))
    raw = estimate_dep(r, s, (2,), DetectorKind.KNOWN,
                       McConfig(trials=20_000, seed=1, raw_samples=True))
    assert abs(fast.dep_hat - raw.dep_hat) <= fast.ci_halfwidth_95 + raw.ci_halfwidth_95


def test_coverage_of_known_detector():
    rng = np.random.default_rng(12)
    hits = 0
    for k in range(20):
        m = int(rng.integers(1, 4))
        mods = tuple(ModalitySpec(i + 1, 1e9, 1e6, 1e-3) for i in range(m))
        s = default_scenario(modalities=mods)
        noise = 1e6 * s.N0
        rho = rng.uniform(0.01, 0.5, m)
        r = channel_from_gains(s, np.sqrt(rho * noise / 1e-3), np.ones(m))
        ids = s.ids
        est = estimate_dep(r, s, ids, DetectorKind.KNOWN, McConfig(trials=20_000, seed=k), k)
        hits += abs(est.dep_hat - dep_exact_known(r, s, ids)) <= 3 * est.ci_halfwidth_95
    assert hits >= 19


def test_ci_floor_and_validation():
    s, r = single_modality(50.0)
    est = estimate_dep(r, s, (1,), DetectorKind.KNOWN, McConfig(trials=1000))
    assert est.ci_halfwidth_95 >= math.hypot(1e-3, 1e-3) - 1e-15
    with pytest.raises(DomainError):
        estimate_dep(r, s, (1,), DetectorKind.KNOWN, McConfig(trials=99))
    with pytest.raises(DomainError):
        McConfig(threads=0)


def test_single_point_sweep_matches_direct_calls():
    s = default_scenario()
    mc = McConfig(trials=2000, realizations=1, seed=6)
    rows = run_sweep(s, "d_W", [45.0], ["fixed"], Knowledge.AWARE, mc, fixed_subset=(4, 5, 6))
    assert len(rows) == 1
    sw = s.with_(d_W=45.0)
    r = realize_channels(sw, 6, 0)
    assert rows[0]["dep_exact"] == dep_exact_known(r, sw, (4, 5, 6))
    assert rows[0]["dep_unknown_low_snr"] == dep_unknown_low_snr(r, sw, (4, 5, 6))
    direct = estimate_dep(r, sw, (4, 5, 6), DetectorKind.KNOWN, mc, 0)
    assert rows[0]["dep_mc"] == direct.dep_hat


def test_sweep_is_deterministic_and_counts_infeasible():
    s = default_scenario()
    mc = McConfig(trials=0, realizations=6, seed=1)
    a = run_sweep(s, "U_target", [5e6, 200e6], ["proposed", "random"], Knowledge.AWARE, mc)
    b = run_sweep(s, "U_target", [5e6, 200e6], ["proposed", "random"], Knowledge.AWARE, mc)
    assert repr(a) == repr(b)   # repr compares NaN cells too
    hopeless = [r for r in a if r["sweep_value"] == 200e6]
    assert all(r["feasible"] == 0 and math.isnan(r["dep"]) for r in hopeless)
    assert all(r["realizations"] == 6 for r in a)


def test_sweep_trends():
    s = default_scenario()
    mc = McConfig(trials=0, realizations=40, seed=2)
    by_target = run_sweep(s, "U_target", [4e6, 8e6, 16e6], ["proposed"], Knowledge.AWARE, mc,
                          iterative=False)
    deps = [r["dep"] for r in by_target]
    assert deps[0] >= deps[1] >= deps[2]
    by_dist = run_sweep(s, "d_W", [20.0, 40.0, 80.0], ["proposed"], Knowledge.AWARE, mc,
                        iterative=False)
    deps = [r["dep"] for r in by_dist]
    assert deps[0] <= deps[1] <= deps[2]


def test_evaluate_subset_picks_metric_by_knowledge():
    s = default_scenario(d_W=50.0)
    r = realize_channels(s, 3, 0)
    aware = evaluate_subset(r, s, (3, 4), Knowledge.AWARE)
    unaware = evaluate_subset(r, s, (3, 4), Knowledge.UNAWARE)
    assert aware["dep"] == aware["dep_exact"]
    assert unaware["dep"] == unaware["dep_unknown_low_snr"]


def test_strategy_spec_parsing():
    spec = StrategySpec.parse("proposed@statistical")
    assert spec.csi_level is CsiLevel.STATISTICAL
    assert spec.metric == "rate_per_expected_mean_shift"
    assert StrategySpec.parse("random").label == "random"
    with pytest.raises(ValueError):
        StrategySpec.parse("bogus")
    with pytest.raises(DomainError):
        run_sweep(default_scenario(), "L", [1], ["random"], Knowledge.AWARE, McConfig())
    with pytest.raises(DomainError):
        run_sweep(default_scenario(), "d_W", [], ["random"], Knowledge.AWARE, McConfig())
