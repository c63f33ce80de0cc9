"""Passive block: penalty APG on the reflection variable, FRCG on the Lorentzian parameters.

The realizability constraint φ = b(params) is relaxed into a quadratic penalty

    f7(φ) = φ^H Q φ − 2 Re{φ^H υ} + ‖φ − b‖² / (2μ),

which is minimized over the unit disk by accelerated projected gradient. The
parameters are then fitted to the new φ by minimizing f8 = ‖φ − b(params)‖²
one parameter family at a time with Fletcher-Reeves conjugate gradient.

Gradients use the real-pair convention: for real and imaginary coordinates
(x, y) of each entry the gradient is returned as ∂f/∂x + j ∂f/∂y, which is
2 ∂f/∂φ*. A step φ − s·grad therefore decreases f to first order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailure
from .fp import PassiveQuadratic
from .irs import IrsState, LorentzianParams, lorentzian_jacobian, lorentzian_response, project_unit_disk
from .scenario import ConfigError, FrequencyGrid, SystemConfig

__all__ = [
    "ApgState",
    "FrcgState",
    "PassiveResult",
    "PARAM_ORDER",
    "penalty_objective",
    "penalty_gradient",
    "penalty_lipschitz",
    "adaptive_mu",
    "apg_iterate",
    "apg_run",
    "f8_value",
    "frcg_gradient_f8",
    "frcg_solve",
    "passive_solve",
]

PARAM_ORDER = ("varphi", "psi", "kappa")
SAFEGUARD_WINDOW = 5
MU_FLOOR = 1e-8
PARAM_FLOOR = 1e-6


def _check_mu(mu: float) -> None:
    if not mu > 0:
        raise ConfigError("penalty weight mu must be > 0")


def _b_of(irs) -> np.ndarray:
    return irs.b_cache if isinstance(irs, IrsState) else np.asarray(irs)


def penalty_objective(phi: np.ndarray, quad: PassiveQuadratic, irs, mu: float) -> float:
    _check_mu(mu)
    b = _b_of(irs)
    return quad.f6(phi) + float(np.sum(np.abs(phi - b) ** 2)) / (2.0 * mu)


def penalty_gradient(phi: np.ndarray, quad: PassiveQuadratic, irs, mu: float) -> np.ndarray:
    _check_mu(mu)
    b = _b_of(irs)
    q_phi = np.einsum("mlp,mp->ml", quad.Q, phi)
    return 2.0 * (q_phi - quad.upsilon) + (phi - b) / mu


def penalty_lipschitz(quad: PassiveQuadratic, mu: float) -> float:
    return 2.0 * quad.lambda_max() + 1.0 / mu


def adaptive_mu(quad: PassiveQuadratic, phi: np.ndarray, n_bs: int) -> float:
    """12 N_b² / (φ^H Q φ), with the denominator floored."""
    return 12.0 * n_bs**2 / max(quad.quad(phi), MU_FLOOR)


@dataclass
class ApgState:
    phi_curr: np.ndarray
    phi_prev: np.ndarray
    d: float
    t: float
    step: float
    mu: float
    f_trace: list = field(default_factory=list)
    rises: int = 0
    halvings: int = 0

    @classmethod
    def start(cls, phi0: np.ndarray, step: float, mu: float) -> "ApgState":
        phi0 = project_unit_disk(phi0)
        return cls(phi_curr=phi0, phi_prev=phi0.copy(), d=0.0, t=0.0, step=step, mu=mu)


def _momentum(d_prev: float) -> tuple[float, float]:
    d = (1.0 + np.sqrt(1.0 + 4.0 * d_prev**2)) / 2.0
    return d, (d - 1.0) / d


def apg_iterate(state: ApgState, quad: PassiveQuadratic, irs) -> ApgState:
    """One extrapolate / gradient / project step; mutates and returns ``state``."""
    d, t = _momentum(state.d)
    y = state.phi_curr + t * (state.phi_curr - state.phi_prev)
    varsigma = y - state.step * penalty_gradient(y, quad, irs, state.mu)
    new = project_unit_disk(varsigma)
    state.phi_prev, state.phi_curr = state.phi_curr, new
    state.d, state.t = d, t
    f = penalty_objective(new, quad, irs, state.mu)
    if not np.isfinite(f):
        raise SolverFailure("penalty objective is not finite", solver="apg", iteration=len(state.f_trace) + 1)
    if state.f_trace and f > state.f_trace[-1]:
        state.rises += 1
        if state.rises >= SAFEGUARD_WINDOW:
            state.step *= 0.5
            state.halvings += 1
            state.d = 0.0
            state.phi_prev = state.phi_curr.copy()
            state.rises = 0
    else:
        state.rises = 0
    state.f_trace.append(f)
    return state


def apg_run(quad: PassiveQuadratic, irs, phi0: np.ndarray, mu: float, step: float,
            max_iter: int, tol: float = 0.0) -> ApgState:
    """Iterate until ``max_iter`` or the move ‖φ_{j+1} − φ_j‖ drops below tol·max(1, ‖φ‖).

    The returned state holds the best iterate seen in ``phi_curr``.
    """
    state = ApgState.start(phi0, step, mu)
    best_phi = state.phi_curr.copy()
    best_f = penalty_objective(best_phi, quad, irs, mu)
    state.f_trace.append(best_f)
    for _ in range(max_iter):
        apg_iterate(state, quad, irs)
        if state.f_trace[-1] < best_f:
            best_f, best_phi = state.f_trace[-1], state.phi_curr.copy()
        move = float(np.linalg.norm(state.phi_curr - state.phi_prev))
        if move <= tol * max(1.0, float(np.linalg.norm(state.phi_curr))):
            break
    state.phi_curr = best_phi
    return state


def f8_value(params: LorentzianParams, phi: np.ndarray, freqs: np.ndarray) -> float:
    return float(np.sum(np.abs(phi - lorentzian_response(params, freqs)) ** 2))


def frcg_gradient_f8(kind: str, irs, phi: np.ndarray, freqs=None) -> np.ndarray:
    """∂f8/∂z for one parameter family, summed over tones.

    ``irs`` is an IrsState or LorentzianParams; ``freqs`` is required with the latter.
    """
    params, freqs = _params_and_freqs(irs, freqs)
    b = lorentzian_response(params, freqs)
    jac = lorentzian_jacobian(params, freqs)[kind]
    return -2.0 * np.sum(np.real(np.conj(phi - b) * jac), axis=0)


def _params_and_freqs(irs, freqs):
    if isinstance(irs, IrsState):
        params = irs.params
    else:
        params = irs
    if freqs is None:
        raise ValueError("frequencies are required")
    freqs = freqs.freqs if isinstance(freqs, FrequencyGrid) else np.asarray(freqs, dtype=float)
    return params, freqs


@dataclass
class FrcgState:
    z: np.ndarray
    p: np.ndarray
    grad_prev_norm2: float
    tau: float = 0.0
    lam: float = 0.0
    f_trace: list = field(default_factory=list)


def _exact_varphi_step(params, z, p, phi, freqs) -> float:
    """b is linear in φ_osc, so f8 along z + τp is a 1-D quadratic in τ."""
    f2 = freqs[:, None] ** 2
    den = params.psi[None, :] ** 2 - f2 + 1j * params.kappa[None, :] * freqs[:, None]
    u = p[None, :] * f2 / den
    r = phi - z[None, :] * f2 / den
    uu = float(np.sum(np.abs(u) ** 2))
    return float(np.real(np.vdot(u, r))) / uu if uu > 0 else 0.0


def frcg_solve(kind: str, params: LorentzianParams, phi: np.ndarray, freqs, max_iter: int,
               init_step: float = 0.1, max_halvings: int = 20, floor=None) -> tuple[LorentzianParams, FrcgState]:
    """Fletcher-Reeves descent on f8 over one parameter family.

    The oscillator strength gets an exact line search; resonance and damping
    use backtracking from ``init_step·‖z‖/‖p‖``. Steps that do not decrease f8
    are never taken, so f8 at exit is at most f8 at entry. ``floor`` (array or
    None) bounds the family from below.
    """
    _, freqs = _params_and_freqs(params, freqs)
    n = params.varphi.size
    z = np.asarray(params.get(kind), dtype=float).copy()
    g = frcg_gradient_f8(kind, params, phi, freqs)
    f = f8_value(params, phi, freqs)
    state = FrcgState(z=z, p=-g, grad_prev_norm2=float(g @ g), f_trace=[f])
    if state.grad_prev_norm2 == 0.0:
        return params, state

    if floor is None and kind == "varphi":
        floor = 0.0

    def clamp(v):
        return v if floor is None else np.maximum(v, floor)

    for j in range(max_iter):
        if j % max(n, 1) == 0 and j > 0 or float(g @ state.p) >= 0.0:
            state.p = -g
        pn = float(np.linalg.norm(state.p))
        if pn == 0.0:
            break
        accepted = None
        if kind == "varphi":
            tau = _exact_varphi_step(params, z, state.p, phi, freqs)
            cand = clamp(z + tau * state.p)
            trial = params.with_(kind, cand)
            ft = f8_value(trial, phi, freqs)
            if ft < f:
                accepted = (tau, cand, trial, ft)
        if accepted is None:
            tau = init_step * max(float(np.linalg.norm(z)), 1e-12) / pn
            for _ in range(max_halvings + 1):
                cand = clamp(z + tau * state.p)
                try:
                    trial = params.with_(kind, cand)
                    ft = f8_value(trial, phi, freqs)
                except ValueError:
                    ft = np.inf
                if ft < f:
                    accepted = (tau, cand, trial, ft)
                    break
                tau *= 0.5
        if accepted is None:
            break
        state.tau, z, params, f = accepted
        state.z = z
        state.f_trace.append(f)
        g_new = frcg_gradient_f8(kind, params, phi, freqs)
        gn2 = float(g_new @ g_new)
        if gn2 == 0.0:
            break
        state.lam = gn2 / state.grad_prev_norm2
        state.p = -g_new + state.lam * state.p
        state.grad_prev_norm2 = gn2
        g = g_new
    return params, state


@dataclass
class PassiveResult:
    irs: IrsState
    f7_trace: list
    apg_iters: int
    penalty_residual: float
    mu: float
    step_halvings: int = 0


def passive_solve(quad: PassiveQuadratic, irs: IrsState, config: SystemConfig, grid: FrequencyGrid,
                  mu: float | None = None, step: float | None = None, rounds: int = 1,
                  tol: float | None = None) -> PassiveResult:
    """Alternate APG on φ with FRCG passes on each Lorentzian family.

    ``mu`` defaults to the config rule evaluated at the entry point, ``step``
    to ``1/apg_varpi``. Stops after ``rounds`` alternations or when f7 changes
    by less than ``tol`` relative.
    """
    tol = config.tol_inner if tol is None else tol
    if mu is None:
        mu = adaptive_mu(quad, irs.phi, config.n_bs) if config.penalty_mu == "adaptive" else float(config.penalty_mu)
    _check_mu(mu)
    if step is None:
        step = passive_step(quad, mu, config)
    freqs = grid.freqs if isinstance(grid, FrequencyGrid) else np.asarray(grid)
    init = irs.params
    floors = {"varphi": PARAM_FLOOR * init.varphi, "psi": PARAM_FLOOR * init.psi, "kappa": None}
    out = irs.copy()
    trace = [penalty_objective(out.phi, quad, out, mu)]
    if not np.isfinite(trace[0]):
        raise SolverFailure("penalty objective is not finite", solver="passive", round=0)
    apg_total = 0
    halvings = 0
    for r in range(rounds):
        apg = apg_run(quad, out, out.phi, mu, step, config.apg_iters, tol)
        apg_total += len(apg.f_trace) - 1
        halvings += apg.halvings
        step = apg.step
        out.phi = apg.phi_curr
        params = out.params
        for kind in PARAM_ORDER:
            params, _ = frcg_solve(kind, params, out.phi, freqs, config.frcg_iters,
                                   config.frcg_init_step, config.frcg_max_halvings, floors[kind])
        out.params = params
        out.refresh(freqs)
        f7 = penalty_objective(out.phi, quad, out, mu)
        if not np.isfinite(f7):
            raise SolverFailure("penalty objective is not finite", solver="passive", round=r + 1)
        trace.append(f7)
        if abs(trace[-2] - f7) <= tol * max(abs(trace[-2]), 1e-300):
            break
    return PassiveResult(irs=out, f7_trace=trace, apg_iters=apg_total,
                         penalty_residual=out.penalty_residual, mu=mu, step_halvings=halvings)


def passive_step(quad: PassiveQuadratic, mu: float, config: SystemConfig) -> float:
    """1/ϖ, or 1/L with L the gradient Lipschitz bound when ``apg_step == 'lipschitz'``."""
    if config.apg_step == "lipschitz":
        return 1.0 / penalty_lipschitz(quad, mu)
    return 1.0 / config.apg_varpi
