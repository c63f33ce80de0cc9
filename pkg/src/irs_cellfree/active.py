"""Consensus ADMM for the active-precoding QCQP.

Minimizes W^H D W − 2 Re{C^H W} subject to one power budget per BS. Each BS
n_b keeps a copy V_{n_b} of the full precoder whose own block is held inside
its power ball; W is driven to agree with all copies. The W step linearizes
the quadratic around the previous iterate, so every step is closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverFailure
from .fp import ActiveQuadratic

__all__ = [
    "CadmmState",
    "CadmmResult",
    "bs_slices",
    "project_bs_blocks",
    "choose_beta",
    "w_update",
    "v_update",
    "dual_update",
    "cadmm_solve",
]

DIVERGENCE_WINDOW = 50


def bs_slices(n_bs: int, n_tx: int) -> list[slice]:
    return [slice(b * n_tx, (b + 1) * n_tx) for b in range(n_bs)]


def project_bs_blocks(W: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Scale each BS block of W (``(M, K, N_b N_t)``) into its power ball."""
    caps = np.asarray(caps, dtype=float)
    n_tx = W.shape[-1] // len(caps)
    out = W.copy()
    for sl, cap in zip(bs_slices(len(caps), n_tx), caps):
        p = float(np.sum(np.abs(W[..., sl]) ** 2))
        if p > cap:
            out[..., sl] *= np.sqrt(cap / p)
    return out


@dataclass
class CadmmState:
    V: np.ndarray  # (N_b, M, K, L)
    q: np.ndarray  # (N_b, M, K, L)
    alpha: float
    beta: float
    W0: np.ndarray
    sigma_last: np.ndarray
    residuals: list = field(default_factory=list)

    @classmethod
    def start(cls, W_init: np.ndarray, n_bs: int, alpha: float, beta: float) -> "CadmmState":
        V = np.repeat(W_init[None], n_bs, axis=0).astype(complex)
        return cls(V=V, q=np.zeros_like(V), alpha=alpha, beta=beta, W0=W_init.astype(complex),
                   sigma_last=np.zeros(n_bs))

    @property
    def n_bs(self) -> int:
        return self.V.shape[0]


def choose_beta(rule, quad: ActiveQuadratic, W0: np.ndarray) -> float:
    """β for the linearized W step.

    ``"rayleigh"`` is the Rayleigh quotient of D at W0 (floored so it stays
    positive at W0 = 0), ``"spectral"`` is λ_max(D), which makes the
    linearization a majorizer; a number is used as is.
    """
    if not isinstance(rule, str):
        return float(rule)
    dim = W0.size
    trace = float(np.real(np.trace(quad.d, axis1=1, axis2=2)).sum()) * quad.C.shape[1]
    floor = max(1e-8 * trace / dim, 1e-300)
    if rule == "spectral":
        return max(quad.lambda_max(), floor)
    if rule == "rayleigh":
        nrm = float(np.real(np.vdot(W0, W0)))
        rq = quad.quad(W0) / nrm if nrm > 0 else 0.0
        return max(rq, floor)
    raise ValueError(f"unknown beta rule {rule!r}")


def w_update(state: CadmmState, quad: ActiveQuadratic) -> np.ndarray:
    a, b = state.alpha, state.beta
    den = state.n_bs * a + b
    if not den > 0:
        raise ValueError("N_b * alpha + beta must be > 0")
    consensus = np.sum(state.V - state.q, axis=0)
    return (b * state.W0 + quad.C - quad.apply_D(state.W0) + a * consensus) / den


def v_update(state: CadmmState, W_new: np.ndarray, caps) -> tuple[np.ndarray, np.ndarray]:
    """Per-BS closed-form copy update.

    ε = W + q_{n_b}; only the n_b block of V_{n_b} is constrained, so the
    rest of V_{n_b} equals ε and the block is scaled back onto the ball when
    it lies outside (σ = ‖ε_block‖/√P − 1, else σ = 0).
    """
    caps = np.asarray(caps, dtype=float)
    n_tx = W_new.shape[-1] // state.n_bs
    V = np.empty_like(state.V)
    sigma = np.zeros(state.n_bs)
    for b, sl in enumerate(bs_slices(state.n_bs, n_tx)):
        eps = W_new + state.q[b]
        nrm = float(np.sqrt(np.sum(np.abs(eps[..., sl]) ** 2)))
        V[b] = eps
        if nrm ** 2 > caps[b]:
            if caps[b] > 0:
                sigma[b] = nrm / np.sqrt(caps[b]) - 1.0
                V[b][..., sl] = eps[..., sl] * (np.sqrt(caps[b]) / nrm)
            else:
                sigma[b] = np.inf
                V[b][..., sl] = 0.0
    state.sigma_last = sigma
    return V, sigma


def dual_update(state: CadmmState, W_new: np.ndarray, V_new: np.ndarray) -> np.ndarray:
    diff = W_new[None] - V_new
    state.residuals.append(float(np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2, 3))))))
    return state.q + diff


@dataclass
class CadmmResult:
    W: np.ndarray
    iterations: int
    converged: bool
    primal_residual: float
    state: CadmmState


def cadmm_solve(
    quad: ActiveQuadratic,
    caps,
    W_init: np.ndarray,
    alpha: float,
    beta="spectral",
    max_iter: int = 35,
    tol: float | None = None,
) -> CadmmResult:
    """Run the W → V → q iteration until both the consensus residual
    max‖W − V_{n_b}‖ and the step ‖W^{j+1} − W^j‖ fall below ``tol``.

    The returned precoder is the last W with each BS block projected into its
    power ball, so the budgets hold exactly whatever the stopping point.
    """
    caps = np.asarray(caps, dtype=float)
    n_bs = len(caps)
    W = np.asarray(W_init, dtype=complex)
    if not np.all(np.isfinite(W)):
        raise ValueError("initial precoder must be finite")
    if tol is None:
        tol = 1e-6 * np.sqrt(W.size)
    state = CadmmState.start(W, n_bs, alpha, choose_beta(beta, quad, W))
    converged = False
    growth = 0
    it = 0
    for it in range(1, max_iter + 1):
        if beta == "rayleigh":
            state.beta = choose_beta(beta, quad, state.W0)
        W_new = w_update(state, quad)
        V_new, _ = v_update(state, W_new, caps)
        state.q = dual_update(state, W_new, V_new)
        state.V = V_new
        step = float(np.linalg.norm(W_new - state.W0))
        state.W0 = W_new
        res = state.residuals[-1]
        if not np.isfinite(res):
            raise SolverFailure("CADMM produced non-finite iterates", solver="cadmm", iteration=it)
        if len(state.residuals) > 1 and res > state.residuals[-2]:
            growth += 1
            if growth >= DIVERGENCE_WINDOW:
                raise SolverFailure("CADMM residual grew for 50 consecutive iterations",
                                    solver="cadmm", iteration=it, residual=res)
        else:
            growth = 0
        if res < tol and step < tol:
            converged = True
            break
    W_out = project_bs_blocks(state.W0, caps)
    return CadmmResult(W=W_out, iterations=it, converged=converged,
                       primal_residual=state.residuals[-1] if state.residuals else 0.0, state=state)
