"""Empirical DEP estimation and averaged experiment sweeps.

Trials are generated in fixed-size blocks, each with its own stream keyed by
(seed, realization index, hypothesis, block index). Counts are summed, so
results do not depend on how blocks are scheduled across threads.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dep as dep_mod
from .detector import (
    detector_params,
    known_excess,
    low_snr_excess,
    sample_energies,
    unknown_excess,
)
from .link_rate import modality_rates
from .scenario import (
    NOISE_STREAM,
    SELECTION_STREAM,
    ChannelRealization,
    Scenario,
    realize_channels,
    stream,
)
from .selection import (
    METRIC_NAMES,
    CsiLevel,
    Knowledge,
    SelectionOutcome,
    Strategy,
    exhaustive_deps,
    run_strategy,
)
from .special_fn import DomainError

Z95 = 1.959963984540054


class DetectorKind(str, enum.Enum):
    KNOWN = "known"
    UNKNOWN = "unknown"
    LOW_SNR = "low_snr"


@dataclass(frozen=True)
class McConfig:
    trials: int = 10_000
    realizations: int = 100
    seed: int = 0
    threads: int = 1
    block_size: int = 1 << 16
    raw_samples: bool = False

    def __post_init__(self):
        if self.trials < 0 or self.realizations < 1 or self.threads < 1 or self.block_size < 1:
            raise DomainError(f"invalid Monte Carlo config {self!r}")


@dataclass(frozen=True)
class McEstimate:
    dep_hat: float
    p_fa_hat: float
    p_md_hat: float
    ci_halfwidth_95: float
    trials: int


def _raw_energies(realization, scenario, hypothesis, subset, rng, n):
    M, L = scenario.M, scenario.L
    sd = np.sqrt(realization.sigma0_sq / 2.0)[None, :, None]
    y = sd * (rng.standard_normal((n, M, L)) + 1j * rng.standard_normal((n, M, L)))
    if hypothesis == 1:
        pos = scenario.positions(subset)
        x = (rng.standard_normal((n, pos.size, L))
             + 1j * rng.standard_normal((n, pos.size, L))) / math.sqrt(2.0)
        amp = np.sqrt(scenario.powers[pos]) * realization.g_W[pos]
        y[:, pos, :] += amp[None, :, None] * x
    return np.sum(y.real ** 2 + y.imag ** 2, axis=2)


def _wald(p, n):
    return max(Z95 * math.sqrt(p * (1.0 - p) / n), 1.0 / n)


def estimate_dep(realization: ChannelRealization, scenario: Scenario, subset,
                 detector_kind: DetectorKind, mc: McConfig,
                 realization_index: int = 0) -> McEstimate:
    """Run ``mc.trials`` blocks under each hypothesis through one detector."""
    if mc.trials < 100:
        raise DomainError("estimate_dep needs at least 100 trials")
    kind = DetectorKind(detector_kind)
    params = detector_params(realization, scenario)
    subset = tuple(subset)

    def decide(E):
        if kind is DetectorKind.KNOWN:
            return known_excess(E, params, subset) > 0
        if kind is DetectorKind.UNKNOWN:
            return unknown_excess(E, params) > 0
        return low_snr_excess(E, params) > 0

    sizes = [min(mc.block_size, mc.trials - k) for k in range(0, mc.trials, mc.block_size)]

    def count(job):
        hyp, blk = job
        rng = stream(mc.seed, NOISE_STREAM, realization_index, hyp, blk)
        if mc.raw_samples:
            E = _raw_energies(realization, scenario, hyp, subset, rng, sizes[blk])
        else:
            E = sample_energies(realization, scenario, hyp, subset, rng, sizes[blk])
        d1 = decide(E)
        return int(np.count_nonzero(d1 if hyp == 0 else ~d1))

    jobs = [(h, b) for h in (0, 1) for b in range(len(sizes))]
    if mc.threads > 1:
        with ThreadPoolExecutor(max_workers=mc.threads) as pool:
            counts = list(pool.map(count, jobs))
    else:
        counts = [count(j) for j in jobs]
    fa = sum(c for (h, _), c in zip(jobs, counts) if h == 0)
    md = sum(c for (h, _), c in zip(jobs, counts) if h == 1)
    n = mc.trials
    p_fa, p_md = fa / n, md / n
    hw = math.hypot(_wald(p_fa, n), _wald(p_md, n))
    return McEstimate(dep_hat=p_fa + p_md, p_fa_hat=p_fa, p_md_hat=p_md,
                      ci_halfwidth_95=hw, trials=n)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StrategySpec:
    """A strategy plus the CSI level its metric uses; ``fixed`` means a given subset."""
    name: str
    csi_level: CsiLevel = CsiLevel.FULL

    @classmethod
    def parse(cls, text: str) -> "StrategySpec":
        name, _, level = text.partition("@")
        name = name.strip().lower()
        if name != "fixed":
            Strategy(name)
        return cls(name, CsiLevel(level.strip().lower() or "full"))

    @property
    def label(self) -> str:
        if self.name == Strategy.PROPOSED.value:
            return f"{self.name}@{self.csi_level.value}"
        return self.name

    @property
    def metric(self) -> str:
        return METRIC_NAMES[self.csi_level] if self.name == Strategy.PROPOSED.value else ""


SWEEP_VARIABLES = ("d_W", "U_target")

ROW_FIELDS = (
    "sweep_var", "sweep_value", "strategy", "csi_level", "metric", "knowledge",
    "realizations", "feasible", "feasible_frac", "mean_sum_rate", "mean_subset_size",
    "dep", "dep_exact", "dep_gamma", "dep_lower_bound", "dep_iterative",
    "dep_unknown_low_snr", "dep_unknown_gamma", "dep_mc", "mc_ci",
)


@dataclass
class _Acc:
    n: int = 0
    feasible: int = 0
    sums: dict = None
    counts: dict = None

    def __post_init__(self):
        self.sums, self.counts = {}, {}

    def add(self, key, value):
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return
        self.sums[key] = self.sums.get(key, 0.0) + value
        self.counts[key] = self.counts.get(key, 0) + 1

    def mean(self, key):
        c = self.counts.get(key, 0)
        return self.sums[key] / c if c else math.nan


def evaluate_subset(realization: ChannelRealization, scenario: Scenario, subset,
                    knowledge: Knowledge, *, mc: McConfig | None = None,
                    realization_index: int = 0, iterative: bool = True) -> dict:
    """All analytic DEPs (and optionally an MC estimate) for one subset."""
    rep = dep_mod.dep_report(realization, scenario, subset, iterative=iterative)
    knowledge = Knowledge(knowledge)
    out = {
        "dep_exact": rep.exact,
        "dep_gamma": rep.approx_gamma,
        "dep_lower_bound": rep.lower_bound,
        "dep_iterative": rep.iterative,
        "dep_unknown_low_snr": rep.unknown_low_snr,
        "dep_unknown_gamma": rep.unknown_gamma,
        "dep": rep.exact if knowledge is Knowledge.AWARE else rep.unknown_low_snr,
        "dep_mc": None,
        "mc_ci": None,
    }
    if mc is not None and mc.trials > 0:
        kind = DetectorKind.KNOWN if knowledge is Knowledge.AWARE else DetectorKind.UNKNOWN
        est = estimate_dep(realization, scenario, subset, kind, mc, realization_index)
        out["dep_mc"], out["mc_ci"] = est.dep_hat, est.ci_halfwidth_95
    return out


def run_sweep(template: Scenario, variable: str, grid, strategies, knowledge: Knowledge,
              mc: McConfig, *, U_target: float = 10e6, fixed_subset=None,
              iterative: bool = True, until_fixpoint: bool = False) -> list[dict]:
    """Average DEPs, rates and feasibility over ``mc.realizations`` channel draws per grid point.

    ``variable`` is ``"d_W"`` (meters) or ``"U_target"`` (bits/s). Infeasible
    realizations are counted and excluded from the DEP and rate means.
    Returns one row per (grid value, strategy) with the keys in ``ROW_FIELDS``.
    """
    if variable not in SWEEP_VARIABLES:
        raise DomainError(f"sweep variable must be one of {SWEEP_VARIABLES}")
    grid = list(grid)
    if not grid:
        raise DomainError("sweep grid is empty")
    specs = [s if isinstance(s, StrategySpec) else StrategySpec.parse(s) for s in strategies]
    if any(s.name == "fixed" for s in specs) and not fixed_subset:
        raise DomainError("the fixed strategy needs a subset")
    knowledge = Knowledge(knowledge)
    accs = {(g, s.label): _Acc() for g in range(len(grid)) for s in specs}
    mc_eval = mc if mc.trials > 0 else None

    def point(g):
        if variable == "d_W":
            return template.with_(d_W=float(grid[g])), U_target
        return template, float(grid[g])

    for r in range(mc.realizations):
        table_cache = {}
        for g in range(len(grid)):
            scen, target = point(g)
            key = scen.d_W
            if key not in table_cache:
                real = realize_channels(scen, mc.seed, r)
                table_cache[key] = [real, None]
            real = table_cache[key][0]
            rates = modality_rates(real, scen)
            for spec in specs:
                acc = accs[(g, spec.label)]
                acc.n += 1
                if spec.name == "fixed":
                    pos = scen.positions(fixed_subset)
                    total = float(rates[pos].sum())
                    outcome = SelectionOutcome(tuple(sorted(fixed_subset)), total, math.nan,
                                               True, Strategy.PROPOSED, spec.csi_level)
                else:
                    dep_table = None
                    if spec.name == Strategy.EXHAUSTIVE.value:
                        if table_cache[key][1] is None:
                            lowest = min(grid) if variable == "U_target" else U_target
                            table_cache[key][1] = exhaustive_deps(real, scen, knowledge,
                                                                  rates, float(lowest))
                        dep_table = table_cache[key][1]
                    rng = stream(mc.seed, SELECTION_STREAM, r)
                    outcome = run_strategy(spec.name, real, scen, target, knowledge=knowledge,
                                           csi_level=spec.csi_level, rng=rng,
                                           dep_table=dep_table, until_fixpoint=until_fixpoint)
                if not outcome.feasible:
                    continue
                acc.feasible += 1
                acc.add("mean_sum_rate", outcome.sum_rate)
                acc.add("mean_subset_size", float(len(outcome.subset)))
                vals = evaluate_subset(real, scen, outcome.subset, knowledge, mc=mc_eval,
                                       realization_index=r, iterative=iterative)
                for k, v in vals.items():
                    acc.add(k, v)

    rows = []
    for g, value in enumerate(grid):
        for spec in specs:
            acc = accs[(g, spec.label)]
            row = {
                "sweep_var": variable, "sweep_value": float(value), "strategy": spec.label,
                "csi_level": spec.csi_level.value, "metric": spec.metric,
                "knowledge": knowledge.value, "realizations": acc.n, "feasible": acc.feasible,
                "feasible_frac": acc.feasible / acc.n if acc.n else math.nan,
            }
            for k in ROW_FIELDS[9:]:
                row[k] = acc.mean(k)
            rows.append(row)
    return rows
