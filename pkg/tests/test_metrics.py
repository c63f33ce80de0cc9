import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_cellfree.channel import effective_channels
from irs_cellfree.metrics import energy_efficiency, evaluate, per_bs_power, sinr, sinr_all, weighted_sum_rate
from irs_cellfree.scenario import SystemConfig, dbm_to_watts

from conftest import random_instance


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_batched_sinr_matches_per_user_loop(seed):
    ch, W, phi = random_instance(seed, M=2, K=3, Nr=2)
    st_ = ch.stacked()
    g = sinr_all(effective_channels(st_, phi), W, 0.3)
    for k in range(3):
        for m in range(2):
            assert g[k, m] == pytest.approx(sinr(W, st_, phi, k, m, 0.3), rel=1e-10)


def test_single_antenna_sinr_closed_form():
    # one BS antenna, one receive antenna, two users: |h_k w_k|² / (|h_k w_j|² + σ²)
    h = np.array([[1.0 + 1j], [0.5]])  # per-user scalar channels H^H
    heff = h.reshape(1, 2, 1, 1)
    W = np.array([[[2.0]], [[1j]]]).reshape(1, 2, 1)
    g = sinr_all(heff, W, 0.5)
    assert g[0, 0] == pytest.approx(abs((1 + 1j) * 2) ** 2 / (abs((1 + 1j) * 1j) ** 2 + 0.5))
    assert g[1, 0] == pytest.approx(abs(0.5j) ** 2 / (abs(0.5 * 2) ** 2 + 0.5))


def test_wsr_and_power():
    assert weighted_sum_rate(np.array([[1.0, 3.0]]), np.array([[1.0, 2.0]])) == pytest.approx(1 + 4)
    W = np.zeros((2, 1, 4), dtype=complex)
    W[0, 0, :2] = 1.0
    W[1, 0, 3] = 2.0
    assert np.allclose(per_bs_power(W, 2), [2.0, 4.0])


def test_energy_efficiency_formula():
    cfg = SystemConfig(n_bs=2, n_users=3, n_irs=1, n_elems=20)
    W = np.zeros((16, 3, 4), dtype=complex)
    W[0, 0, 0] = np.sqrt(1e-3)
    den = 1.2 * 1e-3 + 2 * 10 ** 0.9 + 3 * 1e-2 + 20 * 1e-2
    assert energy_efficiency(5.0, W, cfg) == pytest.approx(5.0 / den)
    cfg_n = cfg.replace(ee_norm="norm")
    den_n = 1.2 * np.sqrt(1e-3) + 2 * 10 ** 0.9 + 3 * 1e-2 + 20 * 1e-2
    assert energy_efficiency(5.0, W, cfg_n) == pytest.approx(5.0 / den_n)


def test_noise_must_be_positive():
    ch, W, phi = random_instance(0)
    with pytest.raises(ValueError):
        sinr_all(effective_channels(ch.stacked(), phi), W, 0.0)


def test_evaluate_report():
    cfg = SystemConfig(n_bs=2, n_users=2, n_irs=1, n_elems=3, n_tones=2, noise_power=0.3,
                       power_caps=dbm_to_watts(30))
    ch, W, phi = random_instance(1)
    rep = evaluate(cfg, ch.stacked(), W, phi)
    assert rep.gamma.shape == (2, 2)
    assert rep.wsr == pytest.approx(np.sum(np.log2(1 + rep.gamma)))
    assert rep.ee == pytest.approx(energy_efficiency(rep.wsr, W, cfg))
