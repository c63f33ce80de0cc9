"""Alternating joint design of the precoders and the IRS, and the comparison baselines.

Each outer iteration refreshes the SINR auxiliaries, then runs the active
block (MMSE auxiliary, quadratic assembly, consensus ADMM) and the passive
block (MMSE auxiliary, quadratic assembly, APG + FRCG). The optimizer works on
the estimated channels; the reported sum-rate is always evaluated on the true
ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fp
from .active import cadmm_solve, project_bs_blocks
from .channel import ChannelSet, StackedChannels, crandn, effective_channels
from .errors import SolverFailure
from .irs import IrsState, initial_state
from .metrics import MetricsReport, evaluate, sinr_all, weighted_sum_rate
from .passive import adaptive_mu, passive_solve
from .scenario import FrequencyGrid, SystemConfig, build_frequency_grid

__all__ = [
    "BASELINES",
    "JointInit",
    "JointResult",
    "init_precoder",
    "random_phase",
    "joint_optimize",
    "run_baseline",
]

BASELINES = ("optimized", "random_phase", "without_irs", "without_direct_link")
GUARD_SLACK = 1e-12


def init_precoder(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Gaussian precoder with every BS block scaled onto its power budget."""
    W = crandn(rng, (config.n_tones, config.n_users, config.n_bs * config.n_tx))
    n_tx = config.n_tx
    for b, cap in enumerate(config.power_caps):
        sl = slice(b * n_tx, (b + 1) * n_tx)
        p = float(np.sum(np.abs(W[..., sl]) ** 2))
        W[..., sl] *= np.sqrt(cap / p) if p > 0 else 0.0
    return W


def random_phase(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus coefficients with one uniform phase per element, shared by all tones."""
    theta = rng.uniform(0.0, 2.0 * np.pi, config.n_refl)
    return np.broadcast_to(np.exp(1j * theta), (config.n_tones, config.n_refl)).copy()


@dataclass
class JointInit:
    W: np.ndarray
    irs: IrsState


@dataclass
class JointResult:
    W: np.ndarray
    irs: IrsState | None
    phi: np.ndarray
    wsr_trace: list
    view_trace: list
    block_trace: list
    outer_iters: int
    converged: bool
    cadmm_iters: int
    apg_iters: int
    rejected: dict = field(default_factory=lambda: {"W": 0, "phi": 0})
    report: MetricsReport | None = None
    physical_report: MetricsReport | None = None

    @property
    def wsr(self) -> float:
        return self.wsr_trace[-1]

    @property
    def penalty_residual(self) -> float:
        return float("nan") if self.irs is None else self.irs.penalty_residual


def _operating_phi(irs: IrsState, mode: str) -> np.ndarray:
    return irs.phi if mode == "free" else irs.physical_phi()


def _wsr(st: StackedChannels, W, phi, config: SystemConfig) -> float:
    return weighted_sum_rate(sinr_all(effective_channels(st, phi), W, config.noise_power), config.weights)


def _relative_change(new: float, old: float) -> float:
    den = max(abs(old), abs(new))
    return 0.0 if den == 0.0 else abs(new - old) / den


def joint_optimize(
    config: SystemConfig,
    channels: ChannelSet,
    init: JointInit | None = None,
    rng: np.random.Generator | None = None,
    estimated: ChannelSet | None = None,
    fixed_phi: np.ndarray | None = None,
    grid: FrequencyGrid | None = None,
    callback: Callable[[str, float], None] | None = None,
) -> JointResult:
    """Alternate the active and passive blocks until the sum-rate settles.

    ``estimated`` are the channels seen by the optimizer (defaults to the true
    ones). With ``fixed_phi`` the IRS is frozen and only the precoders are
    designed. ``callback(block, surrogate)`` fires after every block update.
    """
    grid = build_frequency_grid(config) if grid is None else grid
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    st_true = channels.stacked()
    st = (estimated if estimated is not None else channels).stacked()
    noise, xi, caps = config.noise_power, config.weights, config.power_caps
    tol = config.tol_inner

    if init is None:
        init = JointInit(W=init_precoder(config, rng), irs=initial_state(config, grid))
    W = project_bs_blocks(np.asarray(init.W, dtype=complex), caps)
    irs = None if fixed_phi is not None else init.irs.copy()
    phi_of = (lambda: fixed_phi) if fixed_phi is not None else (lambda: irs.phi)

    block_trace: list = []
    rejected = {"W": 0, "phi": 0}

    def record(block: str, eta) -> float:
        v = fp.surrogate_value(W, phi_of(), eta, st, noise, xi)
        block_trace.append((block, v))
        if callback is not None:
            callback(block, v)
        return v

    mode = config.wsr_mode if irs is not None else "free"
    def true_wsr():
        phi = fixed_phi if irs is None else _operating_phi(irs, mode)
        return _wsr(st_true, W, phi, config)

    view = [_wsr(st, W, phi_of(), config)]
    wsr_trace = [true_wsr()]
    cadmm_total = apg_total = 0
    converged = False
    it = 0
    for it in range(1, config.outer_iters + 1):
        try:
            heff = effective_channels(st, phi_of())
            eta = fp.update_eta(heff, W, noise)
            zeta = fp.compute_zeta(eta, xi)
            current = record("eta", eta)

            for _ in range(config.active_rounds):
                delta = fp.update_delta(heff, W, noise, zeta)
                record("delta", eta)
                quad = fp.assemble_active(delta, heff, zeta, noise)
                res = cadmm_solve(quad, caps, W, config.alpha, config.cadmm_beta, config.cadmm_iters, tol * np.sqrt(W.size))
                cadmm_total += res.iterations
                W_old = W
                W = res.W
                value = fp.surrogate_value(W, phi_of(), eta, st, noise, xi)
                if config.monotone_guard and value < current - GUARD_SLACK * max(abs(current), 1.0):
                    W = W_old
                    rejected["W"] += 1
                    record("W", eta)
                    break
                current = record("W", eta)

            if irs is not None:
                mu = None
                for _ in range(config.passive_rounds):
                    rho = fp.update_rho(st, irs.phi, W, noise, zeta)
                    record("rho", eta)
                    pq = fp.assemble_passive(rho, W, st, zeta, noise)
                    if mu is None:
                        mu = adaptive_mu(pq, irs.phi, config.n_bs) if config.penalty_mu == "adaptive" else float(config.penalty_mu)
                    pres = passive_solve(pq, irs, config, grid, mu=mu)
                    apg_total += pres.apg_iters
                    old = irs
                    irs = pres.irs
                    value = fp.surrogate_value(W, irs.phi, eta, st, noise, xi)
                    if config.monotone_guard and value < current - GUARD_SLACK * max(abs(current), 1.0):
                        irs = old
                        rejected["phi"] += 1
                        record("phi", eta)
                        break
                    current = record("phi", eta)
        except SolverFailure as exc:
            exc.context.setdefault("outer_iteration", it)
            raise
        view.append(_wsr(st, W, phi_of(), config))
        wsr_trace.append(true_wsr())
        if _relative_change(view[-1], view[-2]) < config.tol_outer:
            converged = True
            break

    phi_final = fixed_phi if irs is None else _operating_phi(irs, mode)
    report = evaluate(config, st_true, W, phi_final)
    phys = evaluate(config, st_true, W, irs.physical_phi()) if irs is not None else None
    return JointResult(
        W=W, irs=irs, phi=phi_final, wsr_trace=wsr_trace, view_trace=view, block_trace=block_trace,
        outer_iters=it, converged=converged, cadmm_iters=cadmm_total, apg_iters=apg_total,
        rejected=rejected, report=report, physical_report=phys,
    )


def run_baseline(kind: str, config: SystemConfig, channels: ChannelSet, rng: np.random.Generator | None = None,
                 estimated: ChannelSet | None = None, grid: FrequencyGrid | None = None) -> JointResult:
    """Run one comparison scheme; ``rng`` drives the initial precoder and any random phases."""
    if kind not in BASELINES:
        raise ValueError(f"unknown baseline {kind!r}")
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    grid = build_frequency_grid(config) if grid is None else grid
    W0 = init_precoder(config, rng)
    if kind == "random_phase":
        phi = random_phase(config, rng)
        return joint_optimize(config, channels, JointInit(W0, None), rng, estimated, fixed_phi=phi, grid=grid)
    if kind == "without_irs":
        phi = np.zeros((config.n_tones, config.n_refl), dtype=complex)
        return joint_optimize(config, channels, JointInit(W0, None), rng, estimated, fixed_phi=phi, grid=grid)
    init = JointInit(W0, initial_state(config, grid))
    if kind == "without_direct_link":
        est = estimated.without_direct() if estimated is not None else None
        return joint_optimize(config, channels.without_direct(), init, rng, est, grid=grid)
    return joint_optimize(config, channels, init, rng, estimated, grid=grid)
