"""Modality-set selection under a sum-rate constraint.

The proposed method treats selection as a min-knapsack: each modality has a
covertness cost (the H1-vs-H0 mean shift of its weighted energy, or a proxy
for it when Alice has less channel knowledge) and a rate. Modalities are
added greedily by rate-per-cost until the target is met, then a single
swap pass trades selected modalities for cheaper unselected ones that keep
the constraint satisfied.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dep import dep_exact_from_rho, dep_single_modality, dep_unknown_from_rho
from .link_rate import modality_rates
from .scenario import ChannelRealization, Scenario, mean_snr_willie
from .special_fn import DomainError, exp_integral_e1, hyp_u_aa


class Strategy(str, enum.Enum):
    PROPOSED = "proposed"
    EXHAUSTIVE = "exhaustive"
    MAXDEP_GREEDY = "maxdep_greedy"
    RANDOM = "random"


class CsiLevel(str, enum.Enum):
    FULL = "full"
    STATISTICAL = "statistical"
    NONE = "none"


class Knowledge(str, enum.Enum):
    AWARE = "aware"      # Willie knows the active set
    UNAWARE = "unaware"  # Willie monitors every modality


METRIC_NAMES = {
    CsiLevel.FULL: "rate_per_mean_shift",
    CsiLevel.STATISTICAL: "rate_per_expected_mean_shift",
    CsiLevel.NONE: "rate_per_power",
}


@dataclass(frozen=True)
class SelectionOutcome:
    subset: tuple[int, ...]
    sum_rate: float
    total_cost: float
    feasible: bool
    strategy: Strategy
    csi_level: CsiLevel


# ---------------------------------------------------------------------------
# Costs and efficiency
# ---------------------------------------------------------------------------
def cost_full_csi(rho_W, L: int):
    """L rho^2 / (1 + rho): mean shift of w_m E_m between hypotheses."""
    rho_W = np.asarray(rho_W, dtype=float)
    if np.any(rho_W < 0):
        raise DomainError("rho_W must be nonnegative")
    out = L * rho_W ** 2 / (1.0 + rho_W)
    return float(out) if out.ndim == 0 else out


def cost_statistical(mean_rho: float, kappa: float, L: int) -> float:
    """Expected mean shift when rho_W ~ gamma(kappa, mean_rho / kappa)."""
    if not (mean_rho > 0 and kappa >= 0.5):
        raise DomainError(f"need mean_rho > 0 and kappa >= 0.5, got {mean_rho}, {kappa}")
    z = kappa / mean_rho
    inv_mean = math.exp(kappa * math.log(z)) * hyp_u_aa(kappa, z)  # E[1/(1+rho)]
    return max(0.0, L * (mean_rho + inv_mean - 1.0))


def cost_statistical_rayleigh(mean_rho: float, L: int) -> float:
    """Closed form of :func:`cost_statistical` at kappa = 1 (needs mean_rho > 1/700)."""
    z = 1.0 / mean_rho
    if z > 700:
        raise DomainError("closed form overflows for mean_rho < 1/700")
    return L * (mean_rho + z * math.exp(z) * exp_integral_e1(z) - 1.0)


def efficiency_metric(rate: float, cost: float) -> float:
    """Rate per unit cost; free modalities get +inf so they rank first."""
    if cost < 0:
        raise DomainError("cost must be nonnegative")
    if cost == 0:
        return math.inf
    return rate / cost


def modality_costs(realization: ChannelRealization, scenario: Scenario,
                   csi_level: CsiLevel) -> np.ndarray:
    csi_level = CsiLevel(csi_level)
    if csi_level is CsiLevel.FULL:
        return cost_full_csi(realization.rho_W, scenario.L)
    if csi_level is CsiLevel.STATISTICAL:
        kappa = scenario.fading_W.shape
        return np.array([
            cost_statistical(rho_bar, kappa, scenario.L) if rho_bar > 0 else 0.0
            for rho_bar in (mean_snr_willie(scenario, m) for m in scenario.ids)
        ])
    return scenario.powers.copy()


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------
def _outcome(ids, chosen, rates, costs, target, strategy, csi_level):
    chosen = sorted(chosen)
    rate = float(sum(rates[i] for i in chosen))
    cost = float(sum(costs[i] for i in chosen)) if costs is not None else math.nan
    return SelectionOutcome(
        subset=tuple(ids[i] for i in chosen), sum_rate=rate, total_cost=cost,
        feasible=rate >= target, strategy=Strategy(strategy), csi_level=CsiLevel(csi_level),
    )


def _infeasible(ids, rates, costs, target, strategy, csi_level):
    out = _outcome(ids, range(len(ids)), rates, costs, target, strategy, csi_level)
    return SelectionOutcome(out.subset, out.sum_rate, out.total_cost, False,
                            out.strategy, out.csi_level)


def _check_target(U_target):
    if not U_target > 0:
        raise DomainError(f"U_target must be positive, got {U_target!r}")


def select_proposed(rates, costs, U_target: float, ids=None, *,
                    csi_level: CsiLevel = CsiLevel.FULL,
                    until_fixpoint: bool = False) -> SelectionOutcome:
    """Greedy rate-per-cost selection followed by a cost-reducing swap pass.

    ``until_fixpoint`` repeats the swap pass until no swap is accepted.
    """
    _check_target(U_target)
    rates = np.asarray(rates, dtype=float)
    costs = np.asarray(costs, dtype=float)
    M = rates.size
    ids = tuple(range(1, M + 1)) if ids is None else tuple(ids)
    psi = [efficiency_metric(rates[i], costs[i]) for i in range(M)]
    order = sorted(range(M), key=lambda i: (-psi[i], ids[i]))

    selected: list[int] = []
    total = 0.0
    for i in order:
        selected.append(i)
        total += rates[i]
        if total >= U_target:
            break
    if total < U_target:
        return _infeasible(ids, rates, costs, U_target, Strategy.PROPOSED, csi_level)

    rest = [i for i in order if i not in selected]
    while True:
        swapped = False
        for m_out in list(selected):
            for m_in in list(rest):
                new_total = total - rates[m_out] + rates[m_in]
                if new_total >= U_target and costs[m_in] - costs[m_out] < 0:
                    selected[selected.index(m_out)] = m_in
                    rest[rest.index(m_in)] = m_out
                    total = new_total
                    swapped = True
                    break  # m_out has left the set
        if not (until_fixpoint and swapped):
            break
    return _outcome(ids, selected, rates, costs, U_target, Strategy.PROPOSED, csi_level)


def _fill(order, rates, U_target):
    chosen, total = [], 0.0
    for i in order:
        chosen.append(i)
        total += rates[i]
        if total >= U_target:
            return chosen
    return None


def subset_dep(realization: ChannelRealization, scenario: Scenario, positions,
               knowledge: Knowledge) -> float:
    """Analytic DEP used to score a subset: exact (aware) or low-SNR (unaware)."""
    positions = np.asarray(positions, dtype=int)
    if Knowledge(knowledge) is Knowledge.AWARE:
        return dep_exact_from_rho(realization.rho_W[positions], scenario.L)
    mask = np.zeros(len(realization.ids), dtype=bool)
    mask[positions] = True
    return dep_unknown_from_rho(realization.rho_W, mask, scenario.L)


def exhaustive_deps(realization: ChannelRealization, scenario: Scenario,
                    knowledge: Knowledge, rates=None, min_rate: float = 0.0) -> dict:
    """DEP of every nonempty subset (as position tuples) whose rate reaches ``min_rate``."""
    rates = modality_rates(realization, scenario) if rates is None else rates
    out = {}
    for r in range(1, scenario.M + 1):
        for combo in itertools.combinations(range(scenario.M), r):
            if sum(rates[i] for i in combo) >= min_rate:
                out[combo] = subset_dep(realization, scenario, combo, knowledge)
    return out


def select_exhaustive(realization: ChannelRealization, scenario: Scenario, U_target: float,
                      knowledge: Knowledge = Knowledge.AWARE, *, max_modalities: int = 20,
                      dep_table: dict | None = None) -> SelectionOutcome:
    """Best feasible subset by analytic DEP; ties go to smaller, then lexicographically first.

    ``dep_table`` (from :func:`exhaustive_deps`) lets several targets share one
    enumeration.
    """
    _check_target(U_target)
    if scenario.M > max_modalities:
        raise DomainError(f"exhaustive search limited to {max_modalities} modalities")
    rates = modality_rates(realization, scenario)
    costs = cost_full_csi(realization.rho_W, scenario.L)
    if dep_table is None:
        dep_table = exhaustive_deps(realization, scenario, knowledge, rates, U_target)
    feasible = [(combo, d) for combo, d in dep_table.items()
                if sum(rates[i] for i in combo) >= U_target]
    if not feasible:
        return _infeasible(scenario.ids, rates, costs, U_target, Strategy.EXHAUSTIVE, CsiLevel.FULL)
    ids = scenario.ids
    best, _ = min(feasible, key=lambda cd: (-cd[1], len(cd[0]), tuple(ids[i] for i in cd[0])))
    return _outcome(ids, best, rates, costs, U_target, Strategy.EXHAUSTIVE, CsiLevel.FULL)


def select_maxdep_greedy(realization: ChannelRealization, scenario: Scenario, U_target: float,
                         knowledge: Knowledge = Knowledge.AWARE) -> SelectionOutcome:
    """Add modalities in decreasing single-modality DEP until the target is met."""
    _check_target(U_target)
    rates = modality_rates(realization, scenario)
    costs = cost_full_csi(realization.rho_W, scenario.L)
    if Knowledge(knowledge) is Knowledge.AWARE:
        single = [dep_single_modality(float(r), scenario.L) for r in realization.rho_W]
    else:
        single = [subset_dep(realization, scenario, [i], knowledge) for i in range(scenario.M)]
    ids = scenario.ids
    order = sorted(range(scenario.M), key=lambda i: (-single[i], ids[i]))
    chosen = _fill(order, rates, U_target)
    if chosen is None:
        return _infeasible(ids, rates, costs, U_target, Strategy.MAXDEP_GREEDY, CsiLevel.FULL)
    return _outcome(ids, chosen, rates, costs, U_target, Strategy.MAXDEP_GREEDY, CsiLevel.FULL)


def select_random(rates, U_target: float, rng: np.random.Generator, ids=None,
                  costs=None) -> SelectionOutcome:
    """Distinct uniformly random additions until the target is met."""
    _check_target(U_target)
    rates = np.asarray(rates, dtype=float)
    ids = tuple(range(1, rates.size + 1)) if ids is None else tuple(ids)
    order = rng.permutation(rates.size)
    chosen = _fill(order, rates, U_target)
    if chosen is None:
        return _infeasible(ids, rates, costs, U_target, Strategy.RANDOM, CsiLevel.NONE)
    return _outcome(ids, chosen, rates, costs, U_target, Strategy.RANDOM, CsiLevel.NONE)


def run_strategy(strategy: Strategy, realization: ChannelRealization, scenario: Scenario,
                 U_target: float, *, knowledge: Knowledge = Knowledge.AWARE,
                 csi_level: CsiLevel = CsiLevel.FULL, rng: np.random.Generator | None = None,
                 dep_table: dict | None = None, until_fixpoint: bool = False) -> SelectionOutcome:
    strategy = Strategy(strategy)
    if strategy is Strategy.PROPOSED:
        rates = modality_rates(realization, scenario)
        costs = modality_costs(realization, scenario, csi_level)
        return select_proposed(rates, costs, U_target, scenario.ids,
                               csi_level=csi_level, until_fixpoint=until_fixpoint)
    if strategy is Strategy.EXHAUSTIVE:
        return select_exhaustive(realization, scenario, U_target, knowledge, dep_table=dep_table)
    if strategy is Strategy.MAXDEP_GREEDY:
        return select_maxdep_greedy(realization, scenario, U_target, knowledge)
    if rng is None:
        raise DomainError("random selection needs an rng")
    rates = modality_rates(realization, scenario)
    return select_random(rates, U_target, rng, scenario.ids,
                         cost_full_csi(realization.rho_W, scenario.L))
