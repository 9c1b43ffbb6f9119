import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmcovert.scenario import (
    FadingKind,
    FadingModel,
    ModalitySpec,
    PathLossModel,
    channel_from_gains,
    dbm_to_watts,
    default_scenario,
    mean_snr_willie,
    path_loss_linear,
    realize_channels,
    sample_fading,
    stream,
)
from mmcovert.special_fn import DomainError


def test_defaults():
    s = default_scenario()
    assert s.M == 10
    assert s.ids == tuple(range(1, 11))
    assert s.freqs[2] == pytest.approx(900e6)
    assert s.powers == pytest.approx(np.full(10, 0.01))
    assert s.N0 == pytest.approx(dbm_to_watts(-120.0))
    assert (s.L, s.tau, s.d_B) == (100, 0.15, 30.0)


def test_free_space_is_friis():
    lam = 299_792_458.0 / 2.4e9
    assert path_loss_linear(PathLossModel(2.0), 25.0, 2.4e9) == pytest.approx(
        (lam / (4 * math.pi * 25.0)) ** 2, rel=1e-12)


@given(st.floats(1.0, 1e4), st.floats(1e8, 1e11), st.floats(1.5, 5.0))
@settings(max_examples=50, deadline=None)
def test_path_loss_laws(d, f, n):
    pl = PathLossModel(n)
    g = path_loss_linear(pl, d, f)
    assert path_loss_linear(pl, 2 * d, f) == pytest.approx(g * 2.0 ** -n, rel=1e-10)
    assert path_loss_linear(pl, d, 2 * f) == pytest.approx(g / 4, rel=1e-10)


def test_path_loss_domain():
    with pytest.raises(DomainError):
        path_loss_linear(PathLossModel(), 0.0, 1e9)


def test_nakagami_shape_floor():
    with pytest.raises(DomainError):
        FadingModel(FadingKind.NAKAGAMI, 0.4)


@pytest.mark.parametrize("model", [FadingModel(), FadingModel(FadingKind.NAKAGAMI, 2.0),
                                   FadingModel(FadingKind.NAKAGAMI, 0.5)])
def test_fading_power_moments(model):
    g = sample_fading(model, stream(1, 9), size=400_000)
    p = np.abs(g) ** 2
    assert p.mean() == pytest.approx(1.0, abs=0.01)
    # gamma(kappa, 1/kappa) power has variance 1/kappa
    assert p.var() == pytest.approx(1.0 / model.shape, rel=0.03)


def test_realization_is_reproducible_and_indexed():
    s = default_scenario()
    a = realize_channels(s, 42, 3)
    b = realize_channels(s, 42, 3)
    c = realize_channels(s, 42, 4)
    assert np.array_equal(a.g_W, b.g_W)
    assert not np.array_equal(a.g_W, c.g_W)


def test_variances_follow_snr():
    s = default_scenario()
    r = realize_channels(s, 0, 0)
    assert r.sigma1_sq / r.sigma0_sq == pytest.approx(1.0 + r.rho_W, rel=1e-12)
    assert r.sigma0_sq == pytest.approx(s.bandwidths * s.N0)


def test_mean_snr_matches_sample_mean():
    s = default_scenario(d_W=50.0)
    rho = np.array([realize_channels(s, 3, k).rho_W[1] for k in range(4000)])
    assert rho.mean() == pytest.approx(mean_snr_willie(s, 2), rel=0.05)


def test_zero_power_gives_zero_snr():
    s = default_scenario()
    r = channel_from_gains(s, np.ones(10), np.ones(10))
    assert np.all(r.rho_W > 0)
    s0 = s.with_(modalities=tuple(ModalitySpec(m.id, m.center_freq, m.bandwidth, 0.0)
                                  for m in s.modalities))
    assert np.all(channel_from_gains(s0, np.ones(10), np.ones(10)).rho_W == 0)


def test_unknown_id_rejected():
    s = default_scenario()
    with pytest.raises(DomainError):
        s.positions([11])
    with pytest.raises(DomainError):
        realize_channels(s, 0).positions([0])


def test_bad_scenarios():
    with pytest.raises(DomainError):
        default_scenario(tau=1.0)
    with pytest.raises(DomainError):
        default_scenario(modalities=())
    with pytest.raises(DomainError):
        ModalitySpec(1, 1e9, 1e6, -1.0)
