"""Analytic detection-error probabilities (DEP = P_MD + P_FA).

Under H_k each weighted energy w_m E_m is gamma(L, w_m sigma_k,m^2), and the
scale w_m sigma_k,m^2 depends only on the SNR: rho/(1+rho) under H0 and rho
under H1. Every function below therefore reduces to SNRs and L; the
``*_from_rho`` kernels take those directly and the realization-level wrappers
pick them out of a :class:`ChannelRealization`.

Exact values come from one Gil-Pelaez inversion of the characteristic
function difference,

    DEP = 1 - (1/pi) int_0^inf Im[e^{-it delta} (Phi_1(t) - Phi_0(t))] / t dt,

with the integrand written in polar form (magnitude and phase of each
gamma factor) and integrated by adaptive Gauss-Kronrod.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .scenario import ChannelRealization, Scenario
from .special_fn import (
    DomainError,
    Tolerances,
    gauss_kronrod,
    log_reg_lower_gamma,
    reg_lower_gamma,
)

GP_TOL = Tolerances(rel_tol=1e-10, abs_tol=1e-9, max_iter=400_000)
# |Phi| below which the tail of the inversion integral is dropped
TAIL_CUTOFF = 1e-11  # bound on the DEP error from truncating the inversion integral


class NonConvergenceError(ArithmeticError):
    def __init__(self, msg, last):
        super().__init__(msg)
        self.last = last


@dataclass(frozen=True)
class GammaApprox:
    shape: float
    scale: float

    @classmethod
    def from_moments(cls, mean: float, var: float) -> "GammaApprox":
        if not (mean > 0 and var > 0):
            raise DomainError("moment matching needs positive mean and variance")
        return cls(shape=mean * mean / var, scale=var / mean)

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def var(self) -> float:
        return self.shape * self.scale ** 2

    def cdf(self, x: float) -> float:
        return reg_lower_gamma(self.shape, max(x, 0.0) / self.scale)


@dataclass(frozen=True)
class CfSpec:
    """Characteristic function of sum_m gamma(L, scale_m)."""
    scales: np.ndarray
    L: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.prod((1.0 - 1j * t[..., None] * self.scales) ** (-self.L), axis=-1)


@dataclass
class DepReport:
    exact: float
    approx_gamma: float
    lower_bound: float
    iterative: float | None = None
    unknown_low_snr: float | None = None
    unknown_gamma: float | None = None
    mc_estimate: float | None = None
    mc_ci_halfwidth: float | None = None
    meta: dict = field(default_factory=dict)


def _h0_scale(rho):
    rho = np.asarray(rho, dtype=float)
    return rho / (1.0 + rho)


# ---------------------------------------------------------------------------
# Characteristic-function inversion
# ---------------------------------------------------------------------------
def gil_pelaez_cdf(cf, x: float, tol: Tolerances = GP_TOL, t_max: float | None = None) -> float:
    """P(X <= x) from a vectorized characteristic function ``cf``.

    Without ``t_max`` the integration range is grown by doubling until
    |cf(t)| / t drops below ``tol.abs_tol`` at two consecutive points.
    """
    if t_max is None:
        t_max = 1.0
        while True:
            if (abs(cf(np.array([t_max]))[0]) / t_max < tol.abs_tol
                    and abs(cf(np.array([2 * t_max]))[0]) / (2 * t_max) < tol.abs_tol):
                break
            t_max *= 2.0
            if t_max > 1e12:
                raise DomainError("characteristic function does not decay")

    def integrand(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.imag(np.exp(-1j * t * x) * cf(t)) / t
        return np.nan_to_num(v)

    n0 = int(min(4096, max(16, t_max * max(abs(x), 1.0) / 2.0)))
    val, _ = gauss_kronrod(integrand, 0.0, t_max, abs_tol=tol.abs_tol,
                           rel_tol=tol.rel_tol, initial_panels=n0,
                           max_panels=tol.max_iter)
    return float(np.clip(0.5 - val / math.pi, 0.0, 1.0))


def _t_max(scales, L, delta):
    """Truncation point for the inversion integral.

    Past T the integrand is a decaying amplitude |Phi(t)|/t times an oscillation
    of frequency close to delta, so one integration by parts bounds the
    remainder by about 2 |Phi(T)| / (T (delta - p'(T))), p being the CF phase.
    T is the first point where the phase drift is below delta/2 and that bound
    (counted for both hypotheses, divided by pi) is below TAIL_CUTOFF.
    """
    a = np.asarray(scales, dtype=float)

    def drift_excess(t):   # p'(t) - delta/2, decreasing in t
        return L * np.sum(a / (1.0 + (t * a) ** 2)) - 0.5 * delta

    def log_tail_excess(t):  # log of the remainder bound over TAIL_CUTOFF, decreasing
        log_mag = -0.5 * L * np.log1p((t * a) ** 2).sum()
        return (math.log(8.0 / math.pi) + log_mag - math.log(t) - math.log(delta)
                - math.log(TAIL_CUTOFF))

    def root(f):
        lo, hi = 0.0, 1.0 / float(a.max())
        while f(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                raise DomainError("characteristic function does not decay")
        if lo == 0.0 and f(hi) <= 0 and f(1e-300) <= 0:
            return 0.0
        return brentq(f, lo if lo > 0 else 1e-300, hi, xtol=1e-12 * hi)

    return max(root(drift_excess), root(log_tail_excess))


def dep_from_scales(scales_h1, scales_h0, delta: float, L: int,
                    tol: Tolerances = GP_TOL) -> float:
    """1 - (1/pi) int Im[e^{-it delta}(Phi_1 - Phi_0)] / t dt for gamma-sum CFs."""
    a1 = np.asarray(scales_h1, dtype=float)
    a0 = np.asarray(scales_h0, dtype=float)
    a1, a0 = a1[a1 > 0], a0[a0 > 0]
    if a1.size == 0 and a0.size == 0:
        return 1.0
    mean_gap = L * (a1.sum() - a0.sum())
    # Phi_0 has the smaller scales and so decays last.
    t_max = _t_max(a0 if a0.size else a1, L, delta)

    def polar(t, a):
        ta = t[:, None] * a[None, :]
        log_mag = -0.5 * L * np.log1p(ta * ta).sum(axis=1)
        phase = L * np.arctan(ta).sum(axis=1)
        return log_mag, phase

    def integrand(t):
        m1, p1 = polar(t, a1)
        m0, p0 = polar(t, a0)
        num = np.exp(m1) * np.sin(p1 - t * delta) - np.exp(m0) * np.sin(p0 - t * delta)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / t
        return np.where(t > 0, out, mean_gap)

    val, _ = gauss_kronrod(integrand, 0.0, t_max, abs_tol=tol.abs_tol,
                           rel_tol=tol.rel_tol, initial_panels=32,
                           max_panels=tol.max_iter)
    return float(np.clip(1.0 - val / math.pi, 0.0, 1.0))


# ---------------------------------------------------------------------------
# Known active set
# ---------------------------------------------------------------------------
def dep_exact_from_rho(rho_s, L: int, tol: Tolerances = GP_TOL) -> float:
    rho_s = np.asarray(rho_s, dtype=float)
    if np.all(rho_s == 0):
        return 1.0
    delta = L * np.log1p(rho_s).sum()
    return dep_from_scales(rho_s, _h0_scale(rho_s), delta, L, tol)


def dep_exact_known(realization: ChannelRealization, scenario: Scenario, subset,
                    tol: Tolerances = GP_TOL) -> float:
    """Exact DEP of the known-set optimal detector for active set ``subset``."""
    if len(subset) == 0:
        raise DomainError("subset must be nonempty")
    return dep_exact_from_rho(realization.rho_w_of(subset), scenario.L, tol)


def dep_single_modality(rho_W: float, L: int) -> float:
    """Closed-form DEP for one active modality."""
    if rho_W < 0:
        raise DomainError("rho_W must be nonnegative")
    if rho_W == 0:
        return 1.0
    lg = math.log1p(rho_W)
    x0 = L * (1.0 + 1.0 / rho_W) * lg   # delta / (w sigma0^2)
    x1 = L * lg / rho_W                  # delta / (w sigma1^2)
    return float(np.clip(1.0 - (reg_lower_gamma(L, x0) - reg_lower_gamma(L, x1)), 0.0, 1.0))


def dep_mrc(rho_s, L: int) -> float:
    """DEP when all active modalities carry the same symbols (MRC-equivalent)."""
    return dep_single_modality(float(np.sum(rho_s)), L)


def _gamma_dep(g1: GammaApprox, g0: GammaApprox, delta: float) -> float:
    return float(np.clip(1.0 + g1.cdf(delta) - g0.cdf(delta), 0.0, 1.0))


def gamma_params_known(rho_s, L: int) -> tuple[GammaApprox, GammaApprox]:
    """Moment-matched gamma laws of T_s under H1 and H0."""
    rho_s = np.asarray(rho_s, dtype=float)
    out = []
    for a in (rho_s, _h0_scale(rho_s)):
        s1, s2 = a.sum(), (a * a).sum()
        out.append(GammaApprox(shape=L * s1 * s1 / s2, scale=s2 / s1))
    return out[0], out[1]


def dep_gamma_known_from_rho(rho_s, L: int) -> float:
    rho_s = np.asarray(rho_s, dtype=float)
    if np.all(rho_s == 0):
        return 1.0
    g1, g0 = gamma_params_known(rho_s[rho_s > 0], L)
    return _gamma_dep(g1, g0, L * np.log1p(rho_s).sum())


def dep_gamma_approx_known(realization: ChannelRealization, scenario: Scenario, subset) -> float:
    if len(subset) == 0:
        raise DomainError("subset must be nonempty")
    return dep_gamma_known_from_rho(realization.rho_w_of(subset), scenario.L)


def dep_lower_bound(rho_s, L: int) -> float:
    """Pinsker bound 1 - sqrt(KL / 2); may be negative."""
    rho_s = np.asarray(rho_s, dtype=float)
    kl = L * (np.log1p(rho_s) - rho_s / (1.0 + rho_s)).sum()
    return float(1.0 - math.sqrt(max(kl, 0.0) / 2.0))


@dataclass(frozen=True)
class IterativeResult:
    dep: float
    thresholds: np.ndarray  # energy thresholds delta_m, watts
    iterations: int
    trace: tuple[float, ...]


def _iterative_dep(x, rho, L):
    log_no_fa = np.array([log_reg_lower_gamma(L, xi) for xi in x])
    log_md = np.array([log_reg_lower_gamma(L, xi / (1.0 + r)) for xi, r in zip(x, rho)])
    return -math.expm1(log_no_fa.sum()) + math.exp(log_md.sum()), log_no_fa, log_md


def iterative_from_rho(rho_s, L: int, *, rtol: float = 1e-9, max_iter: int = 200):
    """Per-modality OR-rule thresholds by Gauss-Seidel fixed-point iteration.

    Each sweep updates the thresholds one modality at a time using the
    latest values of the others (simultaneous updates oscillate).
    Thresholds are normalized by the noise power (x_m = delta_m / sigma0^2).
    Returns ``(dep, x, iterations, trace)``.
    """
    rho = np.asarray(rho_s, dtype=float)
    if rho.size == 0 or np.any(rho <= 0):
        raise DomainError("iterative thresholds need every active rho_W > 0")
    x = L * (1.0 + 1.0 / rho) * np.log1p(rho)
    dep, log_no_fa, log_md = _iterative_dep(x, rho, L)
    trace = [dep]
    for it in range(1, max_iter + 1):
        old = x.copy()
        for m in range(rho.size):
            # leave-one-out log products
            corr = (log_no_fa.sum() - log_no_fa[m]) - (log_md.sum() - log_md[m])
            x[m] = max((1.0 + 1.0 / rho[m]) * (L * math.log1p(rho[m]) + corr), 0.0)
            log_no_fa[m] = log_reg_lower_gamma(L, x[m])
            log_md[m] = log_reg_lower_gamma(L, x[m] / (1.0 + rho[m]))
        dep = -math.expm1(log_no_fa.sum()) + math.exp(log_md.sum())
        trace.append(dep)
        change = np.max(np.abs(x - old) / np.maximum(np.abs(old), 1e-300))
        if change < rtol:
            return float(np.clip(dep, 0.0, 1.0)), x, it, tuple(trace)
    raise NonConvergenceError(f"thresholds did not converge in {max_iter} iterations",
                              (float(dep), x, max_iter, tuple(trace)))


def dep_iterative_thresholds(realization: ChannelRealization, scenario: Scenario, subset,
                             *, rtol: float = 1e-9, max_iter: int = 200) -> IterativeResult:
    pos = realization.positions(subset)
    dep, x, its, trace = iterative_from_rho(realization.rho_W[pos], scenario.L,
                                            rtol=rtol, max_iter=max_iter)
    return IterativeResult(dep=dep, thresholds=x * realization.sigma0_sq[pos],
                           iterations=its, trace=trace)


# ---------------------------------------------------------------------------
# Unknown active set, low-SNR detector over all modalities
# ---------------------------------------------------------------------------
def _split(rho_all, active_mask):
    rho_all = np.asarray(rho_all, dtype=float)
    mask = np.asarray(active_mask, dtype=bool)
    a0 = _h0_scale(rho_all)
    a1 = np.where(mask, rho_all, a0)
    return a1, a0


def dep_unknown_from_rho(rho_all, active_mask, L: int, tol: Tolerances = GP_TOL) -> float:
    rho_all = np.asarray(rho_all, dtype=float)
    if np.all(rho_all == 0):
        return 1.0
    a1, a0 = _split(rho_all, active_mask)
    delta = L * np.log1p(rho_all).sum()
    return dep_from_scales(a1, a0, delta, L, tol)


def _mask(realization, subset):
    if len(subset) == 0:
        raise DomainError("subset must be nonempty")
    mask = np.zeros(len(realization.ids), dtype=bool)
    mask[realization.positions(subset)] = True
    return mask


def dep_unknown_low_snr(realization: ChannelRealization, scenario: Scenario, subset,
                        tol: Tolerances = GP_TOL) -> float:
    """DEP of the low-SNR unknown-set detector when ``subset`` is active."""
    return dep_unknown_from_rho(realization.rho_W, _mask(realization, subset), scenario.L, tol)


def gamma_params_unknown(rho_all, active_mask, L: int) -> tuple[GammaApprox, GammaApprox]:
    a1, a0 = _split(rho_all, active_mask)
    g1 = GammaApprox.from_moments(L * a1.sum(), L * (a1 * a1).sum())
    g0 = GammaApprox.from_moments(L * a0.sum(), L * (a0 * a0).sum())
    return g1, g0


def dep_gamma_unknown_from_rho(rho_all, active_mask, L: int) -> float:
    rho_all = np.asarray(rho_all, dtype=float)
    if np.all(rho_all == 0):
        return 1.0
    keep = rho_all > 0
    g1, g0 = gamma_params_unknown(rho_all[keep], np.asarray(active_mask)[keep], L)
    return _gamma_dep(g1, g0, L * np.log1p(rho_all).sum())


def dep_gamma_approx_unknown(realization: ChannelRealization, scenario: Scenario, subset) -> float:
    return dep_gamma_unknown_from_rho(realization.rho_W, _mask(realization, subset), scenario.L)


def dep_report(realization: ChannelRealization, scenario: Scenario, subset,
               *, iterative: bool = True, unknown: bool = True) -> DepReport:
    rho_s = realization.rho_w_of(subset)
    rep = DepReport(
        exact=dep_exact_known(realization, scenario, subset),
        approx_gamma=dep_gamma_approx_known(realization, scenario, subset),
        lower_bound=dep_lower_bound(rho_s, scenario.L),
    )
    if iterative:
        # silent modalities carry no signal and drop out of the OR rule
        live = rho_s[rho_s > 0]
        rep.iterative = iterative_from_rho(live, scenario.L)[0] if live.size else 1.0
    if unknown:
        rep.unknown_low_snr = dep_unknown_low_snr(realization, scenario, subset)
        rep.unknown_gamma = dep_gamma_approx_unknown(realization, scenario, subset)
    return rep
