"""Physical configuration: modalities, path loss, fading, channel draws.

All quantities are SI (watts, hertz, W/Hz, meters). Decibel conversion
happens only in :mod:`mmcovert.cli`.

Random numbers come from counter-based Philox streams keyed by
``(seed, domain, *indices)`` so that any unit of work can be regenerated
independently of execution order or thread count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .special_fn import DomainError

SPEED_OF_LIGHT = 299_792_458.0

# Stream domains; part of the RNG key so channel, noise and selection
# draws never share a stream.
CHANNEL_STREAM = 0
NOISE_STREAM = 1
SELECTION_STREAM = 2

LINK_WILLIE = 0
LINK_BOB = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class ModalitySpec:
    id: int
    center_freq: float  # Hz
    bandwidth: float    # Hz
    tx_power: float     # W

    def __post_init__(self):
        if not (self.center_freq > 0 and self.bandwidth > 0 and self.tx_power >= 0):
            raise DomainError(f"invalid modality {self!r}")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_freq


class FadingKind(str, enum.Enum):
    RAYLEIGH = "rayleigh"
    NAKAGAMI = "nakagami"
    NONE = "none"  # unit deterministic gain; used for checks


@dataclass(frozen=True)
class FadingModel:
    kind: FadingKind = FadingKind.RAYLEIGH
    kappa: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FadingKind(self.kind))
        if self.kind is FadingKind.NAKAGAMI and not self.kappa >= 0.5:
            raise DomainError(f"Nakagami shape must be >= 0.5, got {self.kappa}")

    @property
    def shape(self) -> float:
        """Gamma shape of |g|^2 (1 for Rayleigh)."""
        return self.kappa if self.kind is FadingKind.NAKAGAMI else 1.0


@dataclass(frozen=True)
class PathLossModel:
    exponent_n: float = 2.0

    def gain_db(self, d, freq):
        lam = SPEED_OF_LIGHT / np.asarray(freq, dtype=float)
        return (-10.0 * self.exponent_n * np.log10(d)
                - 20.0 * np.log10(4.0 * np.pi / lam))


def path_loss_linear(model: PathLossModel, d: float, freq: float) -> float:
    """Large-scale power gain (linear, < 1) at distance ``d`` and frequency ``freq``."""
    if not (np.all(np.asarray(d) > 0) and np.all(np.asarray(freq) > 0)):
        raise DomainError("distance and frequency must be positive")
    return db_to_linear(model.gain_db(d, freq))


def sample_fading(model: FadingModel, rng: np.random.Generator, size=None):
    """Unit-mean-power complex small-scale gain(s)."""
    if model.kind is FadingKind.NONE:
        return np.ones(size, dtype=complex) if size is not None else 1.0 + 0j
    if model.kind is FadingKind.RAYLEIGH:
        g = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
        return g
    power = rng.gamma(model.kappa, 1.0 / model.kappa, size)
    phase = rng.uniform(0.0, 2.0 * np.pi, size)
    return np.sqrt(power) * np.exp(1j * phase)


@dataclass(frozen=True)
class Scenario:
    modalities: tuple[ModalitySpec, ...]
    L: int = 100
    N0: float = 1e-15          # W/Hz
    tau: float = 0.15
    d_B: float = 30.0
    d_W: float = 30.0
    fading_W: FadingModel = field(default_factory=FadingModel)
    fading_B: FadingModel = field(default_factory=FadingModel)
    path_loss: PathLossModel = field(default_factory=PathLossModel)
    prior: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "modalities", tuple(self.modalities))
        ids = [m.id for m in self.modalities]
        if not ids:
            raise DomainError("scenario needs at least one modality")
        if len(set(ids)) != len(ids):
            raise DomainError(f"duplicate modality ids {ids}")
        if not (isinstance(self.L, (int, np.integer)) and self.L >= 1):
            raise DomainError(f"L must be a positive integer, got {self.L!r}")
        if not self.N0 > 0:
            raise DomainError("N0 must be positive")
        if not 0 < self.tau < 1:
            raise DomainError("tau must lie in (0, 1)")
        if not (self.d_B > 0 and self.d_W > 0):
            raise DomainError("distances must be positive")
        if self.prior != 0.5:
            raise DomainError("only equal priors are supported")

    @property
    def M(self) -> int:
        return len(self.modalities)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(m.id for m in self.modalities)

    @property
    def stat_csi_exponent(self) -> float:
        """Mean-SNR distance exponent used with statistical CSI (same as n)."""
        return self.path_loss.exponent_n

    @property
    def bandwidths(self) -> np.ndarray:
        return np.array([m.bandwidth for m in self.modalities])

    @property
    def powers(self) -> np.ndarray:
        return np.array([m.tx_power for m in self.modalities])

    @property
    def freqs(self) -> np.ndarray:
        return np.array([m.center_freq for m in self.modalities])

    def positions(self, subset) -> np.ndarray:
        """Array positions of the modality ids in ``subset`` (sorted)."""
        lookup = {mid: i for i, mid in enumerate(self.ids)}
        try:
            return np.array(sorted(lookup[m] for m in subset), dtype=int)
        except KeyError as exc:
            raise DomainError(f"unknown modality id {exc.args[0]}") from None

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def default_modalities(M: int = 10, bandwidth: float = 10e6,
                       tx_power: float = 10e-3) -> tuple[ModalitySpec, ...]:
    """Modality m_i at 300*i MHz, ids 1..M."""
    return tuple(ModalitySpec(i, 300e6 * i, bandwidth, tx_power) for i in range(1, M + 1))


def default_scenario(**changes) -> Scenario:
    """Ten modalities, 10 MHz, 10 mW, N0 = -120 dBm/Hz, L = 100, tau = 0.15, d_B = 30 m."""
    base = Scenario(modalities=default_modalities())
    return base.with_(**changes) if changes else base


@dataclass(frozen=True)
class ChannelRealization:
    ids: tuple[int, ...]
    g_W: np.ndarray
    g_B: np.ndarray
    rho_W: np.ndarray
    rho_B: np.ndarray
    sigma0_sq: np.ndarray
    sigma1_sq: np.ndarray

    def positions(self, subset) -> np.ndarray:
        lookup = {mid: i for i, mid in enumerate(self.ids)}
        try:
            return np.array(sorted(lookup[m] for m in subset), dtype=int)
        except KeyError as exc:
            raise DomainError(f"unknown modality id {exc.args[0]}") from None

    def rho_w_of(self, subset) -> np.ndarray:
        return self.rho_W[self.positions(subset)]


def channel_from_gains(scenario: Scenario, g_W, g_B) -> ChannelRealization:
    """Build a realization (SNRs and hypothesis variances) from complex gains."""
    g_W = np.asarray(g_W, dtype=complex)
    g_B = np.asarray(g_B, dtype=complex)
    noise = scenario.bandwidths * scenario.N0
    rx_W = scenario.powers * np.abs(g_W) ** 2
    rx_B = scenario.powers * np.abs(g_B) ** 2
    return ChannelRealization(
        ids=scenario.ids, g_W=g_W, g_B=g_B,
        rho_W=rx_W / noise, rho_B=rx_B / noise,
        sigma0_sq=noise, sigma1_sq=rx_W + noise,
    )


def realize_channels(scenario: Scenario, seed: int, index: int = 0) -> ChannelRealization:
    """Draw one quasi-static realization of all Willie and Bob channels.

    Each (link, modality) pair has its own stream keyed by the realization
    index, so realization ``k`` is identical however many others are drawn.
    """
    freqs = scenario.freqs
    pl_W = path_loss_linear(scenario.path_loss, scenario.d_W, freqs)
    pl_B = path_loss_linear(scenario.path_loss, scenario.d_B, freqs)
    small_W = np.empty(scenario.M, dtype=complex)
    small_B = np.empty(scenario.M, dtype=complex)
    for i in range(scenario.M):
        small_W[i] = sample_fading(scenario.fading_W,
                                   stream(seed, CHANNEL_STREAM, index, LINK_WILLIE, i))
        small_B[i] = sample_fading(scenario.fading_B,
                                   stream(seed, CHANNEL_STREAM, index, LINK_BOB, i))
    return channel_from_gains(scenario, small_W * np.sqrt(pl_W), small_B * np.sqrt(pl_B))


def mean_snr_willie(scenario: Scenario, m: int) -> float:
    """E[rho_W,m] for unit-mean fading, from the configured path-loss model."""
    spec = scenario.modalities[scenario.positions([m])[0]]
    pl = path_loss_linear(scenario.path_loss, scenario.d_W, spec.center_freq)
    return float(spec.tx_power * pl / (spec.bandwidth * scenario.N0))
