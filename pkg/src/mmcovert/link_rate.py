"""Bob-side finite-blocklength rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization, Scenario
from .special_fn import DomainError, q_inverse


@dataclass(frozen=True)
class RateReport:
    per_modality: dict[int, float]  # bits/s, keyed by modality id
    sum: float
    target: float | None = None


def rate_finite_blocklength(rho_B: float, bandwidth: float, L: int, tau: float) -> float:
    """Normal-approximation rate in bits/s, clamped below at zero."""
    if not (rho_B >= 0 and bandwidth > 0 and L >= 1 and 0 < tau < 1):
        raise DomainError(f"bad rate arguments rho={rho_B}, bw={bandwidth}, L={L}, tau={tau}")
    capacity = math.log2(1.0 + rho_B)
    # 1 - (1+rho)^-2 without cancellation at small rho
    dispersion = -math.expm1(-2.0 * math.log1p(rho_B))
    penalty = math.sqrt(dispersion / L) * q_inverse(tau) / math.log(2.0)
    return max(0.0, bandwidth * (capacity - penalty))


def modality_rates(realization: ChannelRealization, scenario: Scenario) -> np.ndarray:
    """U_m for every modality, in scenario order."""
    return np.array([
        rate_finite_blocklength(float(r), m.bandwidth, scenario.L, scenario.tau)
        for r, m in zip(realization.rho_B, scenario.modalities)
    ])


def sum_rate(realization: ChannelRealization, scenario: Scenario, subset,
             target: float | None = None) -> RateReport:
    pos = scenario.positions(subset)
    rates = modality_rates(realization, scenario)
    per = {scenario.ids[i]: float(rates[i]) for i in pos}
    return RateReport(per_modality=per, sum=float(sum(per.values())), target=target)
