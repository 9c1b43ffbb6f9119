"""Willie's test statistics and decision rules.

Three detectors share the per-modality weights w_m and energies E_m:

* known set ``s``: weighted energy over ``s`` against ``L * sum log(1+rho)``;
* unknown set: the likelihood ratio averaged uniformly over every nonempty
  subset of all modalities, evaluated through an exact product identity;
* low SNR: the first-order expansion of the unknown-set rule, i.e. the
  known-set rule applied to every modality.

Ties go to D0 (the rules use strict inequalities).

Vectorized helpers work on energy arrays of shape ``(trials, M)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .scenario import ChannelRealization, Scenario
from .special_fn import DomainError


class Decision(enum.IntEnum):
    D0 = 0
    D1 = 1


@dataclass(frozen=True)
class Observation:
    ids: tuple[int, ...]
    samples: np.ndarray  # complex, shape (M, L)

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.ids):
            raise DomainError("observation must be dense over modalities x channel uses")

    def energies(self) -> np.ndarray:
        return np.sum(np.abs(self.samples) ** 2, axis=1)


@dataclass(frozen=True)
class DetectorParams:
    ids: tuple[int, ...]
    weights: np.ndarray    # 1/W
    log1p_rho: np.ndarray  # ln(1 + rho_W,m)
    L: int

    @property
    def eta(self) -> float:
        return 1.0 / (2.0 ** len(self.ids) - 1.0)

    def positions(self, subset) -> np.ndarray:
        lookup = {mid: i for i, mid in enumerate(self.ids)}
        try:
            return np.array(sorted(lookup[m] for m in subset), dtype=int)
        except KeyError as exc:
            raise DomainError(f"unknown modality id {exc.args[0]}") from None


def weight(rho_W, bandwidth, N0):
    """LLR weight on the received energy, rho / (Omega N0 (1 + rho))."""
    rho_W = np.asarray(rho_W, dtype=float)
    return rho_W / (np.asarray(bandwidth) * N0 * (1.0 + rho_W))


def energy(samples, L: int | None = None) -> float:
    samples = np.asarray(samples)
    if L is not None and samples.shape[-1] != L:
        raise DomainError(f"expected {L} samples, got {samples.shape[-1]}")
    return float(np.sum(np.abs(samples) ** 2))


def threshold_known(rho_W, L: int) -> float:
    return float(L * np.sum(np.log1p(np.asarray(rho_W, dtype=float))))


def detector_params(realization: ChannelRealization, scenario: Scenario) -> DetectorParams:
    return DetectorParams(
        ids=realization.ids,
        weights=weight(realization.rho_W, scenario.bandwidths, scenario.N0),
        log1p_rho=np.log1p(realization.rho_W),
        L=scenario.L,
    )


# ---------------------------------------------------------------------------
# Statistics on energy arrays
# ---------------------------------------------------------------------------
def known_excess(E, params: DetectorParams, subset) -> np.ndarray:
    """T_s - delta_s for each row of ``E``; D1 where positive."""
    pos = params.positions(subset)
    E = np.asarray(E, dtype=float)
    return E[..., pos] @ params.weights[pos] - params.L * params.log1p_rho[pos].sum()


def log_lr_terms(E, params: DetectorParams) -> np.ndarray:
    """a_m = w_m E_m - L ln(1 + rho_m): per-modality log likelihood ratios."""
    return np.asarray(E, dtype=float) * params.weights - params.L * params.log1p_rho


def _log_half_one_plus_exp(a):
    # ln((1 + e^a) / 2), exactly 0 at a = 0 and stable for |a| large.
    a = np.asarray(a, dtype=float)
    neg = np.minimum(a, 0.0)
    pos = np.maximum(a, 0.0)
    return np.where(a > 0,
                    pos + np.log1p(0.5 * np.expm1(-pos)),
                    np.log1p(0.5 * np.expm1(neg)))


def unknown_excess(E, params: DetectorParams) -> np.ndarray:
    """sum_m ln((1 + e^{a_m}) / 2); positive exactly when the averaged LR exceeds 1.

    eta * (prod(1 + e^a) - 1) > 1  <=>  prod(1 + e^a) > 2^M.
    """
    return _log_half_one_plus_exp(log_lr_terms(E, params)).sum(axis=-1)


def subset_exp_sum(a) -> float:
    """sum over nonempty subsets v of exp(sum_{m in v} a_m), via prod(1 + e^a) - 1."""
    a = np.asarray(a, dtype=float)
    return float(np.expm1(np.logaddexp(0.0, a).sum()))


def unknown_statistic(a) -> float:
    """Averaged likelihood ratio eta * sum_v exp(sum_{m in v} a_m)."""
    a = np.asarray(a, dtype=float)
    M = a.size
    # log(prod(1+e^a) - 1) - log(2^M - 1), in the log domain
    s = np.logaddexp(0.0, a).sum()
    log_num = s + math.log(-math.expm1(-s)) if s > 0 else -math.inf
    log_den = M * math.log(2.0) + math.log(-math.expm1(-M * math.log(2.0)))
    return math.exp(log_num - log_den)


def low_snr_excess(E, params: DetectorParams) -> np.ndarray:
    """T~ - delta~ over all modalities."""
    E = np.asarray(E, dtype=float)
    return E @ params.weights - params.L * params.log1p_rho.sum()


# ---------------------------------------------------------------------------
# Decisions on a single observation
# ---------------------------------------------------------------------------
def decide_known(obs: Observation, params: DetectorParams, subset) -> Decision:
    return Decision(bool(known_excess(obs.energies(), params, subset) > 0))


def decide_unknown(obs: Observation, params: DetectorParams) -> Decision:
    return Decision(bool(unknown_excess(obs.energies(), params) > 0))


def decide_low_snr(obs: Observation, params: DetectorParams) -> Decision:
    return Decision(bool(low_snr_excess(obs.energies(), params) > 0))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
def _variances(realization: ChannelRealization, scenario: Scenario, hypothesis: int, subset):
    if hypothesis not in (0, 1):
        raise DomainError(f"hypothesis must be 0 or 1, got {hypothesis!r}")
    var = realization.sigma0_sq.copy()
    if hypothesis == 1:
        pos = scenario.positions(subset)
        var[pos] = realization.sigma1_sq[pos]
    return var


def sample_observation(realization: ChannelRealization, scenario: Scenario,
                       hypothesis: int, subset, rng: np.random.Generator) -> Observation:
    """Raw received samples over all modalities for one block."""
    M, L = scenario.M, scenario.L
    pos = scenario.positions(subset)
    noise_sd = np.sqrt(realization.sigma0_sq / 2.0)[:, None]
    y = noise_sd * (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L)))
    if hypothesis == 1:
        x = (rng.standard_normal((pos.size, L)) + 1j * rng.standard_normal((pos.size, L))) / math.sqrt(2.0)
        amp = np.sqrt(scenario.powers[pos]) * realization.g_W[pos]
        y[pos] += amp[:, None] * x
    elif hypothesis != 0:
        raise DomainError(f"hypothesis must be 0 or 1, got {hypothesis!r}")
    return Observation(ids=scenario.ids, samples=y)


def sample_energies(realization: ChannelRealization, scenario: Scenario,
                    hypothesis: int, subset, rng: np.random.Generator,
                    trials: int) -> np.ndarray:
    """Per-modality block energies, shape ``(trials, M)``.

    E_m is a sum of L i.i.d. |CN(0, var)|^2 terms, i.e. gamma(L, var); drawing
    it directly is exact in law and avoids materializing the raw samples.
    """
    var = _variances(realization, scenario, hypothesis, subset)
    return rng.gamma(scenario.L, 1.0, size=(trials, scenario.M)) * var
