"""Scalar special functions and the adaptive quadrature they rest on.

Everything here is pure and reentrant. Domain violations raise
:class:`DomainError`; quadrature that runs out of budget raises
:class:`QuadratureError` carrying the partial estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class QuadratureError(ArithmeticError):
    """Adaptive integration did not reach its tolerance within budget."""

    def __init__(self, msg: str, estimate: float, error: float):
        super().__init__(f"{msg} (estimate={estimate!r}, error={error:.3g})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-14
    abs_tol: float = 0.0
    max_iter: int = 100_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be nonnegative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


GAMMA_TOL = Tolerances()

# ---------------------------------------------------------------------------
# Gauss-Kronrod (7, 15) rule, abscissae on [-1, 1] (QUADPACK qk15 constants).
# ---------------------------------------------------------------------------
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss weights aligned with GK_NODES (zero at Kronrod-only nodes).
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5]] = _WG[:3]
G_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
G_WEIGHTS[7] = _WG[3]


def gauss_kronrod(f, a: float, b: float, *, abs_tol: float = 1e-10,
                  rel_tol: float = 1e-10, initial_panels: int = 8,
                  max_panels: int = 200_000) -> tuple[float, float]:
    """Integrate a vectorized real function over the finite interval [a, b].

    Panels are refined by bisection wherever the Kronrod/Gauss difference
    exceeds that panel's share of the tolerance. All active panels are
    evaluated in a single call to ``f`` per refinement round.

    Returns ``(value, error_estimate)``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("gauss_kronrod needs finite limits")
    if a == b:
        return 0.0, 0.0
    span = b - a
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    evaluated = 0
    while True:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = mid[:, None] + half[:, None] * GK_NODES[None, :]
        fx = np.asarray(f(t.ravel()), dtype=float).reshape(t.shape)
        kron = half * (fx @ GK_WEIGHTS)
        gauss = half * (fx @ G_WEIGHTS)
        err = np.abs(kron - gauss)
        evaluated += lo.size
        total = done_val + kron.sum()
        target = max(abs_tol, rel_tol * abs(total))
        ok = err <= target * (hi - lo) / abs(span)
        # Panels at floating-point resolution cannot be split further.
        ok |= (hi - lo) <= 64 * np.finfo(float).eps * np.maximum(np.abs(mid), 1e-300)
        done_val += kron[ok].sum()
        done_err += err[ok].sum()
        if ok.all():
            return float(done_val), float(done_err)
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        if evaluated + 2 * lo.size > max_panels:
            est = done_val + kron[~ok].sum()
            raise QuadratureError("panel budget exhausted", float(est),
                                  float(done_err + err[~ok].sum()))
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])


# ---------------------------------------------------------------------------
# Regularized incomplete gamma
# ---------------------------------------------------------------------------
def _check_gamma_args(s, x):
    if not (math.isfinite(s) and math.isfinite(x)):
        raise DomainError(f"non-finite argument: s={s!r}, x={x!r}")
    if s <= 0 or x < 0:
        raise DomainError(f"need s > 0 and x >= 0, got s={s!r}, x={x!r}")


def _log_prefix(s, x):
    return s * math.log(x) - x - math.lgamma(s)


def _log_series(s, x, tol):
    # log P(s, x) from the power series; valid and fast for x < s + 1.
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(tol.max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) <= abs(total) * tol.rel_tol:
            return _log_prefix(s, x) + math.log(total)
    raise ArithmeticError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _log_upper_cf(s, x, tol):
    # log Q(s, x) by modified Lentz on the Legendre continued fraction.
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, tol.max_iter + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= tol.rel_tol:
            return _log_prefix(s, x) + math.log(h)
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def reg_lower_gamma(s: float, x: float, tol: Tolerances = GAMMA_TOL) -> float:
    """Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s)."""
    _check_gamma_args(s, x)
    if x == 0:
        return 0.0
    if x < s + 1.0:
        return min(1.0, math.exp(_log_series(s, x, tol)))
    return -math.expm1(_log_upper_cf(s, x, tol))


def log_reg_lower_gamma(s: float, x: float, tol: Tolerances = GAMMA_TOL) -> float:
    """Natural log of P(s, x), accurate where P itself would underflow."""
    _check_gamma_args(s, x)
    if x == 0:
        return -math.inf
    if x < s + 1.0:
        return min(0.0, _log_series(s, x, tol))
    return math.log1p(-math.exp(_log_upper_cf(s, x, tol)))


def reg_upper_gamma(s: float, x: float, tol: Tolerances = GAMMA_TOL) -> float:
    """Q(s, x) = 1 - P(s, x), computed without cancellation on either side."""
    _check_gamma_args(s, x)
    if x == 0:
        return 1.0
    if x < s + 1.0:
        return -math.expm1(_log_series(s, x, tol))
    return math.exp(_log_upper_cf(s, x, tol))


# ---------------------------------------------------------------------------
# Gaussian Q and its inverse
# ---------------------------------------------------------------------------
def q_function(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def q_inverse(p: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    """z such that Q(z) = p.

    Newton iterations on log Q, kept inside a shrinking bracket; any step
    that would leave the bracket is replaced by bisection.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"q_inverse needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    target = math.log(p)
    lo, hi = -40.0, 40.0  # log Q(z) decreases in z
    z = 0.0
    for _ in range(max_iter):
        log_q = float(log_ndtr(-z))
        f = log_q - target
        if f > 0:
            lo = z
        else:
            hi = z
        # d/dz log Q(z) = -phi(z) / Q(z)
        log_phi = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi)
        slope = -math.exp(log_phi - log_q)
        step = f / slope
        z_new = z - step
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= tol * max(1.0, abs(z_new)):
            return z_new
        z = z_new
    return z


# ---------------------------------------------------------------------------
# Exponential integral and U(k, k, z)
# ---------------------------------------------------------------------------
_INTEGRAL_RTOL = 1e-13


def _compact_exp(u):
    # e^{-u/(1-u)}, defined as 0 at u = 1.
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.exp(-u / (1.0 - u))
    return np.where(u < 1.0, out, 0.0)


def exp_integral_e1(z: float) -> float:
    """E1(z) = integral over t in [1, inf) of exp(-z t) / t."""
    if not (math.isfinite(z) and z > 0):
        raise DomainError(f"exp_integral_e1 needs z > 0, got {z!r}")
    if z > 745.0:
        return 0.0

    # t = 1 / (1 - u) maps [1, inf) onto [0, 1); e^{-z} is factored out so the
    # integrand e^{-z u/(1-u)} / (1-u) stays O(1) near its peak for large z.
    def integrand(u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            v = 1.0 - u
            val = np.exp(-z * u / v) / v
        return np.where(u < 1.0, np.nan_to_num(val, nan=0.0, posinf=0.0), 0.0)

    val, _ = gauss_kronrod(integrand, 0.0, 1.0, abs_tol=0.0,
                           rel_tol=_INTEGRAL_RTOL, initial_panels=16)
    return math.exp(-z) * val


def hyp_u_aa(kappa: float, z: float) -> float:
    """Confluent hypergeometric U(kappa, kappa, z) for kappa, z > 0.

    Uses U(k, k, z) = (1/Gamma(k)) * integral_0^inf exp(-z t) t^(k-1) / (1 + t) dt.
    """
    if not (math.isfinite(kappa) and kappa > 0):
        raise DomainError(f"hyp_u_aa needs kappa > 0, got {kappa!r}")
    if not (math.isfinite(z) and z > 0):
        raise DomainError(f"hyp_u_aa needs z > 0, got {z!r}")

    # t = u / (z (1 - u)); the z^(1 - kappa) factor is pulled outside.
    def integrand(u):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r = u / (1.0 - u)
            val = (_compact_exp(u) * r ** (kappa - 1.0)
                   / ((1.0 - u) * (z * (1.0 - u) + u)))
        return np.nan_to_num(val, nan=0.0, posinf=0.0)

    if kappa < 1.0:
        # u = v^(1/kappa) absorbs the u^(kappa-1) endpoint singularity.
        p = 1.0 / kappa

        def integrand(v):
            u = v ** p
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                val = (p * _compact_exp(u) * (1.0 - u) ** (1.0 - kappa)
                       / ((1.0 - u) * (z * (1.0 - u) + u)))
            return np.nan_to_num(val, nan=0.0, posinf=0.0)

    val, _ = gauss_kronrod(integrand, 0.0, 1.0, abs_tol=0.0,
                           rel_tol=_INTEGRAL_RTOL, initial_panels=16)
    log_scale = (1.0 - kappa) * math.log(z) - math.lgamma(kappa)
    return math.exp(log_scale) * val
