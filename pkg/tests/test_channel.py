import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jbps import ChannelConfig, LinkParams, generate_instance
from jbps.channel import DEFAULT_DIRECTIONS_DEG, generate_channels, rician_draw, ula_los, user_rng


def test_broadside_is_constant():
    assert np.allclose(ula_los(5, 0.0, 0.5, 2.0), 2.0 * np.ones(5), atol=0)


def test_endfire_two_elements():
    assert np.allclose(ula_los(2, 90.0, 0.5, 1e-4), 1e-4 * np.array([1, -1]), rtol=0, atol=1e-18)


@given(st.integers(1, 16), st.floats(-180, 180), st.floats(0.1, 2.0), st.floats(1e-6, 10))
def test_ula_unit_modulus(n, phi, spacing, amp):
    a = ula_los(n, phi, spacing, amp)
    assert np.allclose(np.abs(a), amp, rtol=1e-14)


def test_large_rician_factor_returns_los():
    los = ula_los(4, 30.0)
    h = rician_draw(np.random.default_rng(1), los, 1e12, 1e-4)
    assert np.max(np.abs(h - los)) < 1e-4 * np.linalg.norm(los)


def test_pure_nlos_variance():
    rng = np.random.default_rng(3)
    los = np.zeros(10, dtype=complex)
    samples = np.concatenate([rician_draw(rng, los, 0.0, 2.5e-3) for _ in range(10_000)])
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(2.5e-3, rel=0.03)


def test_seeded_draw_is_bitwise_repeatable():
    los = ula_los(4, -60.0)
    a = rician_draw(user_rng(5, 2, 1), los, 3.0, 1e-4)
    b = rician_draw(user_rng(5, 2, 1), los, 3.0, 1e-4)
    assert np.array_equal(a, b)


def test_reference_defaults():
    cfg = ChannelConfig()
    assert cfg.user_directions == (-30.0, -60.0, 60.0, 30.0) == DEFAULT_DIRECTIONS_DEG
    assert cfg.num_users == 4 and cfg.element_spacing_ratio == 0.5
    assert cfg.rician_factor == pytest.approx(10**0.5, rel=1e-15)
    inst = generate_instance(cfg, LinkParams(), 0)
    assert np.all(inst.eh_efficiency == 0.5)
    assert np.allclose(inst.antenna_noise, 1e-10, rtol=1e-12)
    assert np.allclose(inst.id_noise, 1e-8, rtol=1e-12)


def test_instance_independent_of_call_order_and_threads():
    cfg = ChannelConfig(seed=11)
    ref = {d: generate_instance(cfg, LinkParams(), d) for d in range(6)}
    out = {}

    def work(d):
        out[d] = generate_instance(cfg, LinkParams(), d)

    threads = [threading.Thread(target=work, args=(d,)) for d in reversed(range(6))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(out[d].channels, ref[d].channels) for d in range(6))
    assert not np.array_equal(ref[0].channels, ref[1].channels)


def test_mean_channel_matches_scaled_los():
    kappa_db, n_draws = 5.0, 10_000
    cfg = ChannelConfig(num_antennas=3, user_directions=(40.0,), rician_factor_db=kappa_db, seed=9,
                        los_amplitude=1e-2, nlos_variance=1e-4)
    H = np.stack([generate_channels(cfg, d)[:, 0] for d in range(n_draws)])
    kappa = 10 ** (kappa_db / 10)
    expected = np.sqrt(kappa / (1 + kappa)) * ula_los(3, 40.0, 0.5, 1e-2)
    stderr = np.sqrt(1e-4 / (1 + kappa) / 2 / n_draws)
    assert np.all(np.abs(H.mean(axis=0).real - expected.real) < 3 * stderr)
    assert np.all(np.abs(H.mean(axis=0).imag - expected.imag) < 3 * stderr)


def test_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(num_antennas=0)
    with pytest.raises(ValueError):
        ChannelConfig(nlos_variance=0.0)
