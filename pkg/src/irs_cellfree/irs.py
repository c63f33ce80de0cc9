"""Lorentzian metasurface response, its parameter Jacobian, and the unit-disk projection."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .scenario import FrequencyGrid, SystemConfig

__all__ = [
    "LorentzianParams",
    "IrsState",
    "lorentzian_response",
    "lorentzian_jacobian",
    "project_unit_disk",
    "initial_params",
    "initial_state",
]


@dataclass(frozen=True)
class LorentzianParams:
    """Per-element oscillator strength, resonance frequency (Hz) and damping (Hz).

    Each array has length N_c * R, IRS-major.
    """

    varphi: np.ndarray
    psi: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        n = len(self.varphi)
        if len(self.psi) != n or len(self.kappa) != n:
            raise ValueError("Lorentzian parameter vectors must share one length")
        if np.any(np.asarray(self.psi) <= 0):
            raise ValueError("resonance frequencies must be > 0")
        if np.any(np.asarray(self.varphi) < 0):
            raise ValueError("oscillator strengths must be >= 0")

    def get(self, kind: str) -> np.ndarray:
        return getattr(self, kind)

    def with_(self, kind: str, value: np.ndarray) -> "LorentzianParams":
        return replace(self, **{kind: np.asarray(value, dtype=float)})


def _denominator(params: LorentzianParams, freqs: np.ndarray) -> np.ndarray:
    f = np.asarray(freqs, dtype=float)[:, None]
    den = params.psi[None, :] ** 2 - f**2 + 1j * params.kappa[None, :] * f
    if np.any(den == 0):
        raise ValueError("Lorentzian response has a zero denominator (ψ = f with κ f = 0)")
    return den


def lorentzian_response(params: LorentzianParams, grid: FrequencyGrid | np.ndarray) -> np.ndarray:
    """Reflection coefficients ``(M, N_c R)``: φ f² / (ψ² − f² + j κ f)."""
    freqs = grid.freqs if isinstance(grid, FrequencyGrid) else np.asarray(grid)
    den = _denominator(params, freqs)
    return params.varphi[None, :] * (freqs[:, None] ** 2) / den


def lorentzian_jacobian(params: LorentzianParams, grid: FrequencyGrid | np.ndarray) -> dict[str, np.ndarray]:
    """Elementwise partials of the response w.r.t. each parameter, each ``(M, N_c R)``."""
    freqs = grid.freqs if isinstance(grid, FrequencyGrid) else np.asarray(grid)
    den = _denominator(params, freqs)
    f = freqs[:, None]
    num = params.varphi[None, :] * f**2
    return {
        "varphi": f**2 / den,
        "psi": -num * 2.0 * params.psi[None, :] / den**2,
        "kappa": -num * 1j * f / den**2,
    }


def project_unit_disk(varsigma: np.ndarray) -> np.ndarray:
    """Metric projection onto {|z| <= 1}, elementwise. Interior points (and 0) are kept."""
    z = np.asarray(varsigma, dtype=complex)
    mag = np.abs(z)
    out = z.copy()
    outside = mag > 1.0
    out[outside] = z[outside] / mag[outside]
    return out


def initial_params(config: SystemConfig) -> LorentzianParams:
    n = config.n_refl
    return LorentzianParams(
        varphi=np.full(n, config.lorentz_varphi),
        psi=np.full(n, config.lorentz_psi),
        kappa=np.full(n, config.kappa0),
    )


@dataclass
class IrsState:
    """Passive-solver state.

    ``phi`` is the free reflection variable (``(M, N_c R)``, kept in the unit
    disk) and ``b_cache`` the response induced by ``params`` on the same grid.
    """

    params: LorentzianParams
    phi: np.ndarray
    b_cache: np.ndarray

    def refresh(self, grid: FrequencyGrid | np.ndarray) -> None:
        self.b_cache = lorentzian_response(self.params, grid)

    @property
    def penalty_residual(self) -> float:
        return float(np.linalg.norm(self.phi - self.b_cache))

    def physical_phi(self) -> np.ndarray:
        """Realizable coefficients: the Lorentzian response clipped to the disk."""
        return project_unit_disk(self.b_cache)

    def copy(self) -> "IrsState":
        return IrsState(params=self.params, phi=self.phi.copy(), b_cache=self.b_cache.copy())


def initial_state(config: SystemConfig, grid: FrequencyGrid) -> IrsState:
    params = initial_params(config)
    b = lorentzian_response(params, grid)
    return IrsState(params=params, phi=project_unit_disk(b), b_cache=b)
