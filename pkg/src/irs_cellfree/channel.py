"""Per-tone frequency-domain channels: synthesis, stacking, cascading, CSI error.

Array layouts (all complex128, tone-major):

* ``direct``   ``(M, N_b, K, N_t, N_r)``  -- H_{n_b,k,m}; the BS->user map is H^H
* ``bs_irs``   ``(M, N_b, N_c, R, N_t)``  -- G_{n_b,i,m}
* ``irs_user`` ``(M, N_c, K, R, N_r)``    -- F_{i,k,m}; the IRS->user map is F^H

Reflection coefficients ``phi`` are ``(M, N_c*R)`` arrays (IRS-major inside a
tone), i.e. the flattened tone-major vector of the passive solver.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .scenario import SPEED_OF_LIGHT, FrequencyGrid, SystemConfig, link_distances, path_loss

__all__ = [
    "ChannelSet",
    "StackedChannels",
    "sample_channels",
    "effective_channel",
    "effective_channels",
    "apply_csi_error",
    "save_channels",
    "load_channels",
    "crandn",
]


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian samples (unit variance)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class StackedChannels:
    """Stacked forms used by the solvers.

    ``hd_h[m, k]`` is [H^H_{1,k,m}, ..., H^H_{N_b,k,m}] (N_r x N_b N_t),
    ``f_h[m, k]`` is F^H_{k,m} (N_r x N_c R) and ``g_cat[m]`` is
    [G_{1,m}, ..., G_{N_b,m}] (N_c R x N_b N_t).
    """

    hd_h: np.ndarray
    f_h: np.ndarray
    g_cat: np.ndarray
    n_bs: int
    n_tx: int

    @property
    def F(self) -> np.ndarray:
        """F_{k,m}, ``(M, K, N_c R, N_r)``."""
        return np.conj(np.swapaxes(self.f_h, -1, -2))

    @property
    def G(self) -> np.ndarray:
        """G_{n_b,m}, ``(M, N_b, N_c R, N_t)``."""
        m, nr, _ = self.g_cat.shape
        return np.moveaxis(self.g_cat.reshape(m, nr, self.n_bs, self.n_tx), 2, 1)

    @property
    def Hd(self) -> np.ndarray:
        """Vertical stack of direct channels, ``(M, K, N_b N_t, N_r)``."""
        return np.conj(np.swapaxes(self.hd_h, -1, -2))


@dataclass(frozen=True)
class ChannelSet:
    direct: np.ndarray
    bs_irs: np.ndarray
    irs_user: np.ndarray

    def __post_init__(self):
        m, nb, k, nt, nr = self.direct.shape
        m2, nb2, nc, r, nt2 = self.bs_irs.shape
        m3, nc3, k3, r3, nr3 = self.irs_user.shape
        if (m, nb, nt) != (m2, nb2, nt2) or (m, nc, k, r, nr) != (m3, nc3, k3, r3, nr3):
            raise ValueError("inconsistent channel dimensions")

    @property
    def dims(self) -> dict:
        m, nb, k, nt, nr = self.direct.shape
        _, _, nc, r, _ = self.bs_irs.shape
        return dict(M=m, Nb=nb, K=k, Nt=nt, Nr=nr, Nc=nc, R=r)

    def stacked(self) -> StackedChannels:
        d = self.dims
        M, Nb, K, Nt, Nr, Nc, R = (d[x] for x in ("M", "Nb", "K", "Nt", "Nr", "Nc", "R"))
        # (M, Nb, K, Nt, Nr) -> (M, K, Nr, Nb, Nt) -> (M, K, Nr, Nb*Nt)
        hd_h = np.conj(self.direct).transpose(0, 2, 4, 1, 3).reshape(M, K, Nr, Nb * Nt)
        # (M, Nc, K, R, Nr) -> (M, K, Nr, Nc, R)
        f_h = np.conj(self.irs_user).transpose(0, 2, 4, 1, 3).reshape(M, K, Nr, Nc * R)
        # (M, Nb, Nc, R, Nt) -> (M, Nc, R, Nb, Nt)
        g_cat = self.bs_irs.transpose(0, 2, 3, 1, 4).reshape(M, Nc * R, Nb * Nt)
        return StackedChannels(hd_h=hd_h, f_h=f_h, g_cat=g_cat, n_bs=Nb, n_tx=Nt)

    def without_direct(self) -> "ChannelSet":
        return replace(self, direct=np.zeros_like(self.direct))


def effective_channels(st: StackedChannels, phi: np.ndarray | None) -> np.ndarray:
    """All composite maps Ĥ^H_{k,m}, shape ``(M, K, N_r, N_b N_t)``.

    ``phi=None`` (or all zeros) leaves only the direct links.
    """
    if phi is None:
        return st.hd_h.copy()
    phi = np.asarray(phi)
    if phi.shape != st.g_cat.shape[:2]:
        raise ValueError(f"phi shape {phi.shape} does not match {st.g_cat.shape[:2]}")
    cascade = np.conj(phi)[:, :, None] * st.g_cat  # Φ_m^H G_m
    return st.hd_h + np.einsum("mkrl,mlt->mkrt", st.f_h, cascade)


def effective_channel(st: StackedChannels, phi: np.ndarray, bs: int, user: int, tone: int) -> np.ndarray:
    """Ĥ^H_{n_b,k,m} = H^H + F^H Φ^H G for one (BS, user, tone), ``(N_r, N_t)``."""
    sl = slice(bs * st.n_tx, (bs + 1) * st.n_tx)
    phi_m = np.asarray(phi)[tone]
    g = st.g_cat[tone][:, sl]
    if st.f_h.shape[-1] != g.shape[0] or phi_m.shape[0] != g.shape[0]:
        raise ValueError("dimension mismatch between F, Φ and G")
    return st.hd_h[tone, user][:, sl] + st.f_h[tone, user] @ (np.conj(phi_m)[:, None] * g)


def _ula(u: float, n: int, scale: float) -> np.ndarray:
    # half-wavelength spacing at f_c; scale = f / f_c
    return np.exp(-1j * np.pi * scale * np.arange(n) * u)


def _los(pos_tx, pos_rx, n_tx, n_rx, f, f_c) -> np.ndarray:
    """Unit-modulus rank-one LoS response (n_rx x n_tx) along x-axis ULAs."""
    diff = np.asarray(pos_rx) - np.asarray(pos_tx)
    d = float(np.linalg.norm(diff))
    u_tx = diff[0] / d
    u_rx = -diff[0] / d
    s = f / f_c
    return np.exp(-2j * np.pi * f * d / SPEED_OF_LIGHT) * np.outer(_ula(u_rx, n_rx, s), np.conj(_ula(u_tx, n_tx, s)))


def _rice_weights(eps: float) -> tuple[float, float]:
    if np.isinf(eps):
        return 1.0, 0.0
    return np.sqrt(eps / (1.0 + eps)), np.sqrt(1.0 / (1.0 + eps))


def sample_channels(
    config: SystemConfig,
    grid: FrequencyGrid,
    rng: np.random.Generator,
    user_positions: np.ndarray | None = None,
) -> ChannelSet:
    """Rician channels for every (link, tone).

    Small-scale scattering is drawn once per link and shared by all tones; the
    LoS part rotates with each tone's frequency.
    """
    users = config.user_positions if user_positions is None else np.asarray(user_positions)
    dist = link_distances(config, users)
    M, Nb, K, Nt, Nr = config.n_tones, config.n_bs, config.n_users, config.n_tx, config.n_rx
    Nc, R = config.n_irs, config.n_elems
    freqs = grid.freqs
    bs, irs = config.bs_positions, config.irs_positions

    def link(pos_a, pos_b, n_a, n_b, eps, gain):
        w_los, w_nlos = _rice_weights(eps)
        nlos = crandn(rng, (n_b, n_a)) if w_nlos > 0 else None
        out = np.empty((M, n_b, n_a), dtype=complex)
        for m, f in enumerate(freqs):
            h = w_los * _los(pos_a, pos_b, n_a, n_b, f, config.f_c) if w_los > 0 else 0.0
            if nlos is not None:
                h = h + w_nlos * nlos
            out[m] = np.sqrt(gain) * h
        return out

    direct = np.empty((M, Nb, K, Nt, Nr), dtype=complex)
    for b in range(Nb):
        for k in range(K):
            gain = path_loss(dist.bu[b, k], config.exp_bu, config)
            phys = link(bs[b], users[k], Nt, Nr, config.rician_bu, gain)  # (M, Nr, Nt)
            direct[:, b, k] = np.conj(np.swapaxes(phys, -1, -2))
    bs_irs = np.empty((M, Nb, Nc, R, Nt), dtype=complex)
    for b in range(Nb):
        for i in range(Nc):
            gain = path_loss(dist.bi[b, i], config.exp_bi, config)
            bs_irs[:, b, i] = link(bs[b], irs[i], Nt, R, config.rician_bi, gain)
    irs_user = np.empty((M, Nc, K, R, Nr), dtype=complex)
    for i in range(Nc):
        for k in range(K):
            gain = path_loss(dist.iu[i, k], config.exp_iu, config)
            phys = link(irs[i], users[k], R, Nr, config.rician_iu, gain)  # (M, Nr, R)
            irs_user[:, i, k] = np.conj(np.swapaxes(phys, -1, -2))
    return ChannelSet(direct=direct, bs_irs=bs_irs, irs_user=irs_user)


def _perturb(h: np.ndarray, omega: float, rng: np.random.Generator) -> np.ndarray:
    n_entries = h.shape[-1] * h.shape[-2]
    power = np.sum(np.abs(h) ** 2, axis=(-2, -1), keepdims=True)
    std = np.sqrt(omega * power / n_entries)
    return h + std * crandn(rng, h.shape)


def apply_csi_error(chan: ChannelSet, omega: float, rng: np.random.Generator) -> ChannelSet:
    """Estimated channels H + ΔH with ΔH ~ CN(0, ω‖H‖²/n I) per link matrix."""
    if omega < 0:
        raise ValueError("CSI error level omega must be >= 0")
    if omega == 0:
        return chan
    return ChannelSet(
        direct=_perturb(chan.direct, omega, rng),
        bs_irs=_perturb(chan.bs_irs, omega, rng),
        irs_user=_perturb(chan.irs_user, omega, rng),
    )


def save_channels(path: str | Path, chan: ChannelSet) -> None:
    """Write the three link arrays to an ``.npz`` file (layouts as in the module doc)."""
    np.savez(path, direct=chan.direct, bs_irs=chan.bs_irs, irs_user=chan.irs_user)


def load_channels(path: str | Path) -> ChannelSet:
    with np.load(path) as data:
        return ChannelSet(direct=data["direct"], bs_irs=data["bs_irs"], irs_user=data["irs_user"])
