"""SINR, weighted sum-rate and energy efficiency.

Precoders are ``(M, K, N_b N_t)`` arrays (flattening gives the tone-major
stacked vector W). Per-(user, tone) scalars are returned as ``(K, M)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import StackedChannels, effective_channels
from .scenario import SystemConfig

__all__ = [
    "MetricsReport",
    "received_signals",
    "sinr",
    "sinr_all",
    "weighted_sum_rate",
    "energy_efficiency",
    "per_bs_power",
    "evaluate",
]


def received_signals(heff_h: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``A[m, k, :, j] = Ĥ^H_{k,m} w_{m,j}``, shape ``(M, K, N_r, K)``."""
    return np.einsum("mkrt,mjt->mkrj", heff_h, W)


def _check_noise(noise: float) -> None:
    if not noise > 0:
        raise ValueError("noise power must be > 0")


def sinr_all(heff_h: np.ndarray, W: np.ndarray, noise: float) -> np.ndarray:
    """γ_{k,m} for every user and tone, ``(K, M)``."""
    _check_noise(noise)
    A = received_signals(heff_h, W)
    M, K, Nr, _ = A.shape
    cov = A @ np.conj(np.swapaxes(A, -1, -2)) + noise * np.eye(Nr)  # (M, K, Nr, Nr)
    idx = np.arange(K)
    s = A[:, idx, :, idx].transpose(1, 0, 2)  # (M, K, Nr): own-signal s_{k,m}
    interf = cov - s[..., :, None] * np.conj(s[..., None, :])
    x = np.linalg.solve(interf, s[..., None])[..., 0]
    gamma = np.real(np.einsum("mkr,mkr->mk", np.conj(s), x))
    return np.maximum(gamma, 0.0).T


def sinr(W: np.ndarray, st: StackedChannels, phi, user: int, tone: int, noise: float) -> float:
    """γ_{k,m} for one user and tone."""
    _check_noise(noise)
    h = effective_channels(st, phi)[tone, user]  # (Nr, NbNt)
    sig = h @ W[tone, user]
    others = [h @ W[tone, j] for j in range(W.shape[1]) if j != user]
    cov = noise * np.eye(h.shape[0], dtype=complex)
    for v in others:
        cov += np.outer(v, np.conj(v))
    return float(max(np.real(np.conj(sig) @ np.linalg.solve(cov, sig)), 0.0))


def weighted_sum_rate(gammas: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(np.asarray(weights) * np.log2(1.0 + np.asarray(gammas))))


def per_bs_power(W: np.ndarray, n_bs: int) -> np.ndarray:
    """Σ_{k,m} ‖w_{n_b,m,k}‖² for each BS."""
    M, K, L = W.shape
    blocks = W.reshape(M, K, n_bs, L // n_bs)
    return np.sum(np.abs(blocks) ** 2, axis=(0, 1, 3))


def energy_efficiency(wsr: float, W: np.ndarray, config: SystemConfig) -> float:
    """R_sum over total consumed power; the amplifier term uses ‖W‖² unless ``ee_norm='norm'``."""
    total = float(np.sum(np.abs(W) ** 2))
    tx = total if config.ee_norm == "squared" else np.sqrt(total)
    den = (
        config.ee_lambda * tx
        + config.n_bs * config.ee_p_bs
        + config.n_users * config.ee_p_user
        + config.n_irs * config.n_elems * config.ee_p_irs
    )
    return float(wsr / den)


@dataclass
class MetricsReport:
    gamma: np.ndarray
    wsr: float
    ee: float | None
    per_bs_power: np.ndarray
    ee_norm: str = "squared"


def evaluate(config: SystemConfig, st: StackedChannels, W: np.ndarray, phi, with_ee: bool = True) -> MetricsReport:
    heff = effective_channels(st, phi)
    gamma = sinr_all(heff, W, config.noise_power)
    wsr = weighted_sum_rate(gamma, config.weights)
    ee = energy_efficiency(wsr, W, config) if with_ee else None
    return MetricsReport(gamma=gamma, wsr=wsr, ee=ee, per_bs_power=per_bs_power(W, config.n_bs), ee_norm=config.ee_norm)
