"""Fractional-programming auxiliaries and the quadratic forms built from them.

The log-SINR objective is lifted with a per-(user, tone) auxiliary η
(Lagrangian dual transform), after which the ratio terms are replaced by
quadratic surrogates with auxiliaries δ (for W) and ρ (for Φ). Each auxiliary
update is the exact maximizer of its surrogate, so every update is an ascent
step for the corresponding lower bound.

Shapes: η, ζ are ``(K, M)``; δ, ρ are ``(M, K, N_r)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import StackedChannels, effective_channels
from .metrics import _check_noise, received_signals, sinr_all

__all__ = [
    "FpAux",
    "ActiveQuadratic",
    "PassiveQuadratic",
    "update_eta",
    "compute_zeta",
    "fraction_terms",
    "weighted_fraction_sum",
    "update_delta",
    "active_surrogate",
    "assemble_active",
    "cascade_signals",
    "update_rho",
    "passive_surrogate",
    "assemble_passive",
    "surrogate_value",
]

LN2 = np.log(2.0)


@dataclass
class FpAux:
    eta: np.ndarray
    zeta: np.ndarray
    delta: np.ndarray | None = None
    rho: np.ndarray | None = None


def update_eta(heff_h: np.ndarray, W: np.ndarray, noise: float) -> np.ndarray:
    """The optimal η is the SINR itself."""
    return sinr_all(heff_h, W, noise)


def compute_zeta(eta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.asarray(weights) * (1.0 + np.asarray(eta))


def _full_cov(A: np.ndarray, noise: float) -> np.ndarray:
    nr = A.shape[2]
    return A @ np.conj(np.swapaxes(A, -1, -2)) + noise * np.eye(nr)


def _own(A: np.ndarray) -> np.ndarray:
    idx = np.arange(A.shape[1])
    return A[:, idx, :, idx].transpose(1, 0, 2)


def fraction_terms(heff_h: np.ndarray, W: np.ndarray, noise: float) -> np.ndarray:
    """f_{k,m} = s^H (Σ_j s_j s_j^H + σ² I)^{-1} s = γ/(1+γ), ``(K, M)``."""
    _check_noise(noise)
    A = received_signals(heff_h, W)
    s = _own(A)
    x = np.linalg.solve(_full_cov(A, noise), s[..., None])[..., 0]
    return np.real(np.einsum("mkr,mkr->mk", np.conj(s), x)).T


def weighted_fraction_sum(heff_h: np.ndarray, W: np.ndarray, noise: float, zeta: np.ndarray) -> float:
    """Σ ζ_{k,m} f_{k,m}: the W-block objective, and equally the Φ-block objective."""
    return float(np.sum(zeta * fraction_terms(heff_h, W, noise)))


def _mmse_aux(A: np.ndarray, noise: float, zeta: np.ndarray) -> np.ndarray:
    s = _own(A)
    x = np.linalg.solve(_full_cov(A, noise), s[..., None])[..., 0]
    return np.sqrt(zeta.T)[..., None] * x


def update_delta(heff_h: np.ndarray, W: np.ndarray, noise: float, zeta: np.ndarray) -> np.ndarray:
    _check_noise(noise)
    return _mmse_aux(received_signals(heff_h, W), noise, zeta)


def _quadratic_transform(A: np.ndarray, aux: np.ndarray, noise: float, zeta: np.ndarray) -> float:
    """Σ 2√ζ Re{a^H s_k} − a^H (Σ_j s_j s_j^H + σ² I) a over all (k, m)."""
    s = _own(A)
    lin = 2.0 * np.sqrt(zeta.T) * np.real(np.einsum("mkr,mkr->mk", np.conj(aux), s))
    proj = np.einsum("mkr,mkrj->mkj", np.conj(aux), A)  # a^H s_j
    quad = np.sum(np.abs(proj) ** 2, axis=-1) + noise * np.sum(np.abs(aux) ** 2, axis=-1)
    return float(np.sum(lin - quad))


def active_surrogate(W: np.ndarray, delta: np.ndarray, heff_h: np.ndarray, noise: float, zeta: np.ndarray) -> float:
    """Quadratic-transform lower bound of Σ ζ f_{k,m} in W at fixed δ."""
    return _quadratic_transform(received_signals(heff_h, W), delta, noise, zeta)


@dataclass
class ActiveQuadratic:
    """f(W) = −W^H D W + 2 Re{C^H W} − U with D = blkdiag_m(I_K ⊗ d_m).

    ``d`` is ``(M, L, L)`` with L = N_b N_t, ``C`` is ``(M, K, L)`` laid out
    like W.
    """

    d: np.ndarray
    C: np.ndarray
    U: float

    def apply_D(self, W: np.ndarray) -> np.ndarray:
        return np.einsum("mab,mkb->mka", self.d, W)

    def quad(self, W: np.ndarray) -> float:
        return float(np.real(np.vdot(W, self.apply_D(W))))

    def f3(self, W: np.ndarray) -> float:
        """Minimization form W^H D W − 2 Re{C^H W}."""
        return self.quad(W) - 2.0 * float(np.real(np.vdot(self.C, W)))

    def value(self, W: np.ndarray) -> float:
        return -self.f3(W) - self.U

    def dense_D(self) -> np.ndarray:
        M, L, _ = self.d.shape
        K = self.C.shape[1]
        out = np.zeros((M * K * L, M * K * L), dtype=complex)
        for m in range(M):
            for k in range(K):
                o = (m * K + k) * L
                out[o:o + L, o:o + L] = self.d[m]
        return out

    def lambda_max(self) -> float:
        return float(max(np.max(np.linalg.eigvalsh(self.d)), 0.0))


def assemble_active(delta: np.ndarray, heff_h: np.ndarray, zeta: np.ndarray, noise: float) -> ActiveQuadratic:
    """d_m = Σ_k Ĥ δ δ^H Ĥ^H, c_{k,m} = √ζ Ĥ δ, U = Σ σ² ‖δ‖².

    The √ζ factor sits on c so that the form reproduces the δ-surrogate exactly.
    """
    hd = np.einsum("mkrt,mkr->mkt", np.conj(heff_h), delta)  # Ĥ_{k,m} δ_{k,m}
    d = np.einsum("mka,mkb->mab", hd, np.conj(hd))
    C = np.sqrt(zeta.T)[..., None] * hd
    U = float(noise * np.sum(np.abs(delta) ** 2))
    return ActiveQuadratic(d=d, C=C, U=U)


def cascade_signals(st: StackedChannels, phi: np.ndarray, W: np.ndarray) -> np.ndarray:
    """T_{k,m,j} built link by link: Σ_{n_b} (H^H + F^H Φ^H G) w, ``(M, K, N_r, K)``."""
    direct = np.einsum("mkrt,mjt->mkrj", st.hd_h, W)
    gw = np.einsum("mlt,mjt->mjl", st.g_cat, W)  # Σ_nb G_{n_b,m} w_{n_b,m,j}
    refl = np.einsum("mkrl,ml,mjl->mkrj", st.f_h, np.conj(phi), gw)
    return direct + refl


def update_rho(st: StackedChannels, phi: np.ndarray, W: np.ndarray, noise: float, zeta: np.ndarray) -> np.ndarray:
    _check_noise(noise)
    return _mmse_aux(cascade_signals(st, phi, W), noise, zeta)


def passive_surrogate(phi: np.ndarray, rho: np.ndarray, st: StackedChannels, W: np.ndarray, noise: float, zeta: np.ndarray) -> float:
    """Σ g_{k,m}: quadratic-transform lower bound of Σ ζ f_{k,m} in Φ at fixed ρ."""
    return _quadratic_transform(cascade_signals(st, phi, W), rho, noise, zeta)


@dataclass
class PassiveQuadratic:
    """Σ_m (−φ_m^H Q_m φ_m + 2 Re{φ_m^H υ_m}) − P.

    ``b[m, k, j]``, ``varpi[m, k, j, :]``, ``Q`` ``(M, N_c R, N_c R)`` and
    ``upsilon`` ``(M, N_c R)``; Q is block diagonal over tones.
    """

    b: np.ndarray
    varpi: np.ndarray
    Q: np.ndarray
    upsilon: np.ndarray
    P: float

    def quad(self, phi: np.ndarray) -> float:
        return float(np.real(np.einsum("ml,mlp,mp->", np.conj(phi), self.Q, phi)))

    def f6(self, phi: np.ndarray) -> float:
        """Minimization form φ^H Q φ − 2 Re{φ^H υ}."""
        return self.quad(phi) - 2.0 * float(np.real(np.vdot(phi, self.upsilon)))

    def value(self, phi: np.ndarray) -> float:
        return -self.f6(phi) - self.P

    def lambda_max(self) -> float:
        return float(max(np.max(np.linalg.eigvalsh(self.Q)), 0.0))


def assemble_passive(rho: np.ndarray, W: np.ndarray, st: StackedChannels, zeta: np.ndarray, noise: float) -> PassiveQuadratic:
    b = np.einsum("mkr,mkrt,mjt->mkj", np.conj(rho), st.hd_h, W)
    gw = np.einsum("mlt,mjt->mjl", st.g_cat, W)
    a = np.einsum("mkr,mkrl->mkl", np.conj(rho), st.f_h)  # diag(ρ^H F^H)
    varpi = a[:, :, None, :] * gw[:, None, :, :]  # (M, K, K, NcR)
    Q = np.einsum("mkjl,mkjp->mlp", varpi, np.conj(varpi))
    sz = np.sqrt(zeta.T)  # (M, K)
    idx = np.arange(varpi.shape[1])
    own = varpi[:, idx, idx, :]  # (M, K, NcR)
    upsilon = np.einsum("mk,mkl->ml", sz, own) - np.einsum("mkj,mkjl->ml", np.conj(b), varpi)
    b_own = b[:, idx, idx]
    P = float(
        np.sum(np.abs(b) ** 2)
        + noise * np.sum(np.abs(rho) ** 2)
        - 2.0 * np.sum(sz * np.real(b_own))
    )
    return PassiveQuadratic(b=b, varpi=varpi, Q=Q, upsilon=upsilon, P=P)


def surrogate_value(W: np.ndarray, phi, eta: np.ndarray, st: StackedChannels, noise: float, weights: np.ndarray) -> float:
    """The η-lifted objective, in bits.

    Natural-log dual transform rescaled by 1/ln 2: at η = SINR it equals the
    weighted sum-rate, and η = SINR is its exact maximizer over η.
    """
    heff = effective_channels(st, phi)
    f = fraction_terms(heff, W, noise)
    xi = np.asarray(weights)
    return float(
        np.sum(xi * np.log2(1.0 + eta)) - np.sum(xi * eta) / LN2 + np.sum(xi * (1.0 + eta) * f) / LN2
    )
