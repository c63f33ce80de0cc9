"""Scenario configuration, node geometry, tone grid and large-scale path loss.

All quantities held by :class:`SystemConfig` are linear-scale (watts, linear
gains, Hz, meters). Decibel values are only accepted by :func:`config_from_dict`
and converted once on load.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "SystemConfig",
    "FrequencyGrid",
    "LinkDistances",
    "build_frequency_grid",
    "path_loss",
    "link_distances",
    "place_users",
    "config_from_dict",
    "load_config",
    "db_to_linear",
    "dbm_to_watts",
]

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised for scenario values that violate the configuration invariants."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _default_bs_positions(n_bs: int) -> np.ndarray:
    return np.array([[40.0 * j, -50.0, 3.0] for j in range(n_bs)])


def _default_irs_positions(n_irs: int) -> np.ndarray:
    base = [[30.0, 10.0, 6.0], [130.0, 10.0, 6.0]]
    # extra IRSs continue the 100 m spacing along the street
    out = [base[i] if i < 2 else [30.0 + 100.0 * i, 10.0, 6.0] for i in range(n_irs)]
    return np.array(out, dtype=float)


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Everything needed to describe one scenario.

    Defaults reproduce the full-scale simulation setup (5 BSs, 2 IRSs of 100
    elements, 4 users, 16 tones). ``None`` for the position arrays means "use
    the default street layout"; ``user_positions=None`` means users are drawn
    uniformly over the disc ``user_center``/``user_radius`` at trial time.
    """

    n_bs: int = 5
    n_tx: int = 2
    n_users: int = 4
    n_rx: int = 2
    n_irs: int = 2
    n_elems: int = 100
    n_tones: int = 16

    f_c: float = 3e9
    bandwidth: float = 100e6

    noise_power: float = dbm_to_watts(-80.0)
    power_caps: Any = None  # (n_bs,) watts; None -> 0 dBm each
    weights: Any = None  # (K, M); None -> all ones

    bs_positions: Any = None
    irs_positions: Any = None
    user_positions: Any = None
    user_center: tuple[float, float] = (30.0, 0.0)
    user_radius: float = 10.0
    user_height: float = 1.5
    # optional {"bu": d, "iu": d, "bi": d} overriding geometric link lengths
    fixed_distances: Mapping[str, float] | None = None

    pathloss_c0: float = db_to_linear(-30.0)
    pathloss_d0: float = 1.0
    exp_bu: float = 3.5
    exp_iu: float = 2.8
    exp_bi: float = 2.2
    rician_bu: float = 0.0
    rician_iu: float = 0.0
    rician_bi: float = math.inf

    lorentz_varphi: float = 1.0
    lorentz_psi: float = 3e9
    lorentz_q: float = 50.0

    cadmm_alpha: float | None = None  # None -> n_bs
    cadmm_beta: str | float = "spectral"
    apg_varpi: float = 1.0 / 8.0  # APG step is 1/apg_varpi
    apg_step: str = "constant"  # "constant" (1/apg_varpi) | "lipschitz"
    penalty_mu: str | float = "adaptive"
    frcg_init_step: float = 0.1
    frcg_max_halvings: int = 20

    outer_iters: int = 30
    cadmm_iters: int = 500
    apg_iters: int = 40
    frcg_iters: int = 5
    active_rounds: int = 3
    passive_rounds: int = 3
    tol_outer: float = 1e-3
    tol_inner: float = 1e-6

    csi_omega: float = 0.0
    monotone_guard: bool = True
    wsr_mode: str = "free"  # "free" | "physical"

    ee_lambda: float = 1.2
    ee_p_bs: float = 10.0 ** (9.0 / 10.0)  # 9 dBW
    ee_p_user: float = dbm_to_watts(10.0)
    ee_p_irs: float = dbm_to_watts(10.0)
    ee_norm: str = "squared"  # "squared" | "norm"

    rng_seed: int = 0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        counts = ("n_bs", "n_tx", "n_users", "n_rx", "n_irs", "n_elems", "n_tones")
        for name in counts:
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
            set_(name, int(v))

        caps = self.power_caps
        if caps is None:
            caps = np.full(self.n_bs, dbm_to_watts(0.0))
        caps = np.broadcast_to(np.asarray(caps, dtype=float), (self.n_bs,)).copy()
        if np.any(caps < 0):
            raise ConfigError("power caps must be nonnegative")
        set_("power_caps", _frozen(caps))

        w = self.weights
        if w is None:
            w = np.ones((self.n_users, self.n_tones))
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_users, self.n_tones):
            w = np.broadcast_to(w, (self.n_users, self.n_tones)).copy()
        if np.any(w <= 0):
            raise ConfigError("weights must be strictly positive")
        set_("weights", _frozen(w))

        bs = _default_bs_positions(self.n_bs) if self.bs_positions is None else self.bs_positions
        irs = _default_irs_positions(self.n_irs) if self.irs_positions is None else self.irs_positions
        bs = np.asarray(bs, dtype=float).reshape(-1, 3)
        irs = np.asarray(irs, dtype=float).reshape(-1, 3)
        if bs.shape[0] != self.n_bs:
            raise ConfigError(f"expected {self.n_bs} BS positions, got {bs.shape[0]}")
        if irs.shape[0] != self.n_irs:
            raise ConfigError(f"expected {self.n_irs} IRS positions, got {irs.shape[0]}")
        set_("bs_positions", _frozen(bs))
        set_("irs_positions", _frozen(irs))
        if self.user_positions is not None:
            up = np.asarray(self.user_positions, dtype=float).reshape(-1, 3)
            if up.shape[0] != self.n_users:
                raise ConfigError(f"expected {self.n_users} user positions")
            set_("user_positions", _frozen(up))
        set_("user_center", tuple(float(c) for c in self.user_center))

        positive = [
            "f_c", "bandwidth", "noise_power", "pathloss_c0", "pathloss_d0",
            "exp_bu", "exp_iu", "exp_bi", "apg_varpi", "lorentz_varphi",
            "lorentz_psi", "lorentz_q", "frcg_init_step", "tol_outer", "tol_inner",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("rician_bu", "rician_iu", "rician_bi"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.cadmm_alpha is not None and not self.cadmm_alpha > 0:
            raise ConfigError("cadmm_alpha must be > 0")
        if isinstance(self.cadmm_beta, str):
            if self.cadmm_beta not in ("rayleigh", "spectral"):
                raise ConfigError(f"unknown beta rule {self.cadmm_beta!r}")
        elif not self.cadmm_beta > 0:
            raise ConfigError("cadmm_beta must be > 0")
        if isinstance(self.penalty_mu, str):
            if self.penalty_mu != "adaptive":
                raise ConfigError(f"unknown mu rule {self.penalty_mu!r}")
        elif not self.penalty_mu > 0:
            raise ConfigError("penalty_mu must be > 0")
        if self.apg_step not in ("constant", "lipschitz"):
            raise ConfigError(f"unknown apg_step {self.apg_step!r}")
        if self.csi_omega < 0:
            raise ConfigError("csi_omega must be >= 0")
        if self.wsr_mode not in ("free", "physical"):
            raise ConfigError(f"unknown wsr_mode {self.wsr_mode!r}")
        if self.ee_norm not in ("squared", "norm"):
            raise ConfigError(f"unknown ee_norm {self.ee_norm!r}")
        for name in ("outer_iters", "cadmm_iters", "apg_iters", "frcg_iters",
                     "active_rounds", "passive_rounds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def alpha(self) -> float:
        return float(self.n_bs if self.cadmm_alpha is None else self.cadmm_alpha)

    @property
    def kappa0(self) -> float:
        return self.lorentz_psi / self.lorentz_q

    @property
    def n_refl(self) -> int:
        """Total reflecting elements N_c * R."""
        return self.n_irs * self.n_elems

    @property
    def w_dim(self) -> int:
        return self.n_tx * self.n_bs * self.n_tones * self.n_users

    def replace(self, **changes) -> "SystemConfig":
        """``dataclasses.replace`` that re-derives count-shaped defaults.

        Changing a count drops the dependent arrays back to their defaults
        unless they are passed explicitly (uniform caps keep their value).
        """
        if changes.get("n_bs", self.n_bs) != self.n_bs:
            changes.setdefault("bs_positions", None)
            if "power_caps" not in changes:
                caps = self.power_caps
                if not np.all(caps == caps[0]):
                    raise ConfigError("non-uniform power caps; pass power_caps explicitly")
                changes["power_caps"] = float(caps[0])
        if changes.get("n_irs", self.n_irs) != self.n_irs:
            changes.setdefault("irs_positions", None)
        if (changes.get("n_users", self.n_users), changes.get("n_tones", self.n_tones)) != (
            self.n_users, self.n_tones
        ):
            if "weights" not in changes:
                w = self.weights
                if not np.all(w == w.flat[0]):
                    raise ConfigError("non-uniform weights; pass weights explicitly")
                changes["weights"] = float(w.flat[0])
            if changes.get("n_users", self.n_users) != self.n_users:
                changes.setdefault("user_positions", None)
        return dataclasses.replace(self, **changes)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    freqs: np.ndarray

    def __len__(self) -> int:
        return len(self.freqs)


def build_frequency_grid(config: SystemConfig) -> FrequencyGrid:
    m = np.arange(1, config.n_tones + 1)
    freqs = config.f_c + (m - (config.n_tones + 1) / 2.0) * config.bandwidth / config.n_tones
    return FrequencyGrid(_frozen(freqs))


def path_loss(distance, exponent: float, config: SystemConfig):
    """Linear gain ``c0 * (d / d0) ** -exponent``; works on scalars and arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss needs strictly positive distances")
    out = config.pathloss_c0 * (d / config.pathloss_d0) ** (-exponent)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LinkDistances:
    bu: np.ndarray  # (n_bs, K)
    iu: np.ndarray  # (n_irs, K)
    bi: np.ndarray  # (n_bs, n_irs)


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def link_distances(config: SystemConfig, user_positions: np.ndarray | None = None) -> LinkDistances:
    users = config.user_positions if user_positions is None else np.asarray(user_positions)
    if users is None:
        raise ValueError("user positions are not set; call place_users first")
    bu = _pairwise(config.bs_positions, users)
    iu = _pairwise(config.irs_positions, users)
    bi = _pairwise(config.bs_positions, config.irs_positions)
    fixed = config.fixed_distances or {}
    if "bu" in fixed:
        bu = np.full_like(bu, float(fixed["bu"]))
    if "iu" in fixed:
        iu = np.full_like(iu, float(fixed["iu"]))
    if "bi" in fixed:
        bi = np.full_like(bi, float(fixed["bi"]))
    for name, d in (("BS-user", bu), ("IRS-user", iu), ("BS-IRS", bi)):
        if np.any(d <= 0):
            raise ValueError(f"coincident {name} positions give zero link distance")
    return LinkDistances(bu=bu, iu=iu, bi=bi)


def place_users(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """User coordinates: the configured ones, else area-uniform over the disc."""
    if config.user_positions is not None:
        return np.array(config.user_positions)
    k = config.n_users
    r = config.user_radius * np.sqrt(rng.uniform(size=k))
    th = rng.uniform(0.0, 2.0 * np.pi, size=k)
    cx, cy = config.user_center
    return np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th), np.full(k, config.user_height)])


# keys carrying decibel units; value -> (field, converter)
_DB_KEYS = {
    "noise_power_dbm": ("noise_power", dbm_to_watts),
    "power_cap_dbm": ("power_caps", None),
    "pathloss_c0_db": ("pathloss_c0", db_to_linear),
    "ee_p_bs_dbw": ("ee_p_bs", db_to_linear),
    "ee_p_bs_dbm": ("ee_p_bs", dbm_to_watts),
    "ee_p_user_dbm": ("ee_p_user", dbm_to_watts),
    "ee_p_irs_dbm": ("ee_p_irs", dbm_to_watts),
}


def _as_float(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf", ".inf"):
        return math.inf
    return v


def config_from_dict(data: Mapping[str, Any]) -> SystemConfig:
    """Build a config from a flat key/value mapping (the scenario file format)."""
    names = {f.name for f in dataclasses.fields(SystemConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _DB_KEYS:
            target, conv = _DB_KEYS[key]
            if key == "power_cap_dbm":
                value = [dbm_to_watts(v) for v in np.atleast_1d(value)]
            else:
                value = conv(float(value))
            kwargs[target] = value
        elif key in names:
            kwargs[key] = _as_float(value)
        else:
            raise ConfigError(f"unknown scenario key {key!r}")
    if "power_caps" in kwargs and len(kwargs["power_caps"]) == 1:
        kwargs["power_caps"] = kwargs["power_caps"][0]
    return SystemConfig(**kwargs)


def load_config(path: str | Path, seed: int | None = None) -> SystemConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    cfg = config_from_dict(data)
    if seed is not None:
        cfg = cfg.replace(rng_seed=int(seed))
    return cfg
