"""Monte-Carlo sweeps written to CSV.

Every (sweep value, trial) point is an independent task with its own seed
(``base_seed ^ trial``), so rows are identical whether the tasks run serially
or in a process pool; rows are sorted back into task order before writing.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import apply_csi_error, sample_channels
from .complexity import ComplexityInputs, complexity_report, format_percent, format_sci
from .errors import SolverFailure
from .joint import BASELINES, JointResult, run_baseline
from .metrics import per_bs_power
from .scenario import ConfigError, SystemConfig, build_frequency_grid, dbm_to_watts, place_users

__all__ = [
    "CSV_COLUMNS",
    "KINDS",
    "DEFAULT_SWEEPS",
    "ExperimentSpec",
    "point_config",
    "run_point",
    "run_experiment",
    "format_rows",
]

CSV_COLUMNS = (
    "experiment", "sweep_name", "sweep_value", "trial", "baseline", "wsr_bps_hz", "ee_bps_hz_w",
    "outer_iters", "cadmm_iters", "apg_iters", "penalty_residual", "max_bs_power_w", "seed",
)

KINDS = ("distance_sweep", "iteration_trace", "csi_sweep", "power_sweep", "element_sweep",
         "ee_grid", "complexity_report")

SWEEP_NAMES = {
    "distance_sweep": "user_center_x_m",
    "iteration_trace": "outer_iteration",
    "csi_sweep": "csi_omega",
    "power_sweep": "power_cap_dbm",
    "element_sweep": "n_elems",
    "ee_grid": "n_bs:n_irs",
}

DEFAULT_SWEEPS = {
    "distance_sweep": (10, 30, 50, 70, 90, 110, 130, 150),
    "iteration_trace": (30,),
    "csi_sweep": (0.0, 0.1, 0.2, 0.3),
    "power_sweep": (-10, -5, 0, 5, 10, 15, 20),
    "element_sweep": (20, 40, 60, 80, 100),
    "ee_grid": tuple(f"{nb}:{nc}" for nb in (1, 3, 5, 7) for nc in (2, 6, 10, 14, 18, 22)),
}

# fixed user spots for the power and element sweeps
FIXED_USERS = ((20.0, 0.0), (60.0, 0.0), (100.0, 0.0), (140.0, 0.0))
EE_DISTANCES = {"bu": 110.0, "bi": 110.0, "iu": 15.0}
FEAS_TOL = 1e-9


@dataclass
class ExperimentSpec:
    kind: str
    values: tuple = ()
    trials: int = 20
    baselines: tuple = BASELINES
    out: str | Path | None = None
    workers: int = 1
    iteration_baselines: tuple = field(default=("optimized", "without_direct_link"))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be an integer >= 1")
        unknown = set(self.baselines) - set(BASELINES)
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}")
        if not self.values and self.kind in DEFAULT_SWEEPS:
            self.values = DEFAULT_SWEEPS[self.kind]
        self.values = tuple(self.values)
        self._check_values()

    def _check_values(self):
        for v in self.values:
            if self.kind == "distance_sweep" and not np.isfinite(float(v)):
                raise ConfigError("distances must be finite")
            if self.kind == "csi_sweep" and not 0.0 <= float(v) <= 1.0:
                raise ConfigError("csi_omega must lie in [0, 1]")
            if self.kind in ("element_sweep", "iteration_trace") and int(v) < 1:
                raise ConfigError(f"{self.kind} values must be >= 1")
            if self.kind == "ee_grid":
                nb, nc = _grid_pair(v)
                if nb < 1 or nc < 1:
                    raise ConfigError("ee_grid counts must be >= 1")

    @property
    def sweep_name(self) -> str:
        return SWEEP_NAMES.get(self.kind, "")


def _grid_pair(v) -> tuple[int, int]:
    if isinstance(v, str):
        a, b = v.split(":")
        return int(a), int(b)
    a, b = v
    return int(a), int(b)


def point_config(kind: str, value, config: SystemConfig) -> SystemConfig:
    """Scenario for one sweep point."""
    if kind == "distance_sweep":
        return config.replace(user_center=(float(value), 0.0), user_positions=None)
    if kind == "csi_sweep":
        return config.replace(csi_omega=float(value))
    if kind == "iteration_trace":
        return config.replace(outer_iters=int(value))
    if kind in ("power_sweep", "element_sweep"):
        cfg = config
        if kind == "power_sweep":
            cfg = cfg.replace(power_caps=dbm_to_watts(float(value)))
        else:
            cfg = cfg.replace(n_elems=int(value))
        if cfg.n_users == len(FIXED_USERS):
            pos = [[x, y, cfg.user_height] for x, y in FIXED_USERS]
            cfg = cfg.replace(user_positions=pos)
        return cfg
    if kind == "ee_grid":
        nb, nc = _grid_pair(value)
        return config.replace(n_bs=nb, n_irs=nc, n_tones=1, n_tx=1, n_rx=1, n_elems=20,
                              fixed_distances=dict(EE_DISTANCES))
    raise ConfigError(f"{kind} has no sweep points")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if np.isnan(x) else repr(x)


def _row(kind, sweep_name, value, trial, baseline, res: JointResult, config, seed, wsr=None):
    p = per_bs_power(res.W, config.n_bs)
    if np.any(p > config.power_caps * (1 + FEAS_TOL) + FEAS_TOL * 1e-12):
        raise SolverFailure("reported precoder violates a BS power budget", baseline=baseline, trial=trial)
    return [
        kind, sweep_name, str(value), str(trial), baseline,
        _fmt(res.wsr if wsr is None else wsr), _fmt(res.report.ee), _fmt(res.outer_iters),
        _fmt(res.cadmm_iters), _fmt(res.apg_iters), _fmt(res.penalty_residual), _fmt(float(np.max(p))), str(seed),
    ]


def run_point(kind: str, value, trial: int, config: SystemConfig, baselines, sweep_name: str = "") -> list[list[str]]:
    """All CSV rows for one (sweep value, trial)."""
    cfg = point_config(kind, value, config)
    seed = int(config.rng_seed) ^ int(trial)
    grid = build_frequency_grid(cfg)
    rng = np.random.default_rng(seed)
    users = place_users(cfg, rng)
    channels = sample_channels(cfg, grid, rng, users)
    estimated = apply_csi_error(channels, cfg.csi_omega, rng) if cfg.csi_omega > 0 else None
    rows = []
    for idx, name in enumerate(BASELINES):
        if name not in baselines:
            continue
        brng = np.random.default_rng([seed, idx + 1])
        res = run_baseline(name, cfg, channels, brng, estimated=estimated, grid=grid)
        if kind == "iteration_trace":
            for i, w in enumerate(res.wsr_trace):
                rows.append(_row(kind, sweep_name, i, trial, name, res, cfg, seed, wsr=w))
        else:
            rows.append(_row(kind, sweep_name, value, trial, name, res, cfg, seed))
    return rows


def _task(args):
    return run_point(*args)


def format_rows(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def _complexity_csv(config: SystemConfig) -> str:
    inp = ComplexityInputs(n_tx=config.n_tx, n_bs=config.n_bs, n_tones=config.n_tones,
                           n_users=config.n_users, n_rx=config.n_rx, n_irs=config.n_irs,
                           n_elems=config.n_elems)
    rep = complexity_report(inp)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("quantity", "value"))
    for name, v in rep.rows.items():
        w.writerow((name, v))
    w.writerow(("overall", format_sci(rep.overall)))
    w.writerow(("reference", format_sci(rep.reference)))
    w.writerow(("ratio", format_percent(rep.ratio)))
    return buf.getvalue()


def run_experiment(spec: ExperimentSpec, config: SystemConfig) -> str:
    """Run the sweep and return the CSV text; it is also written to ``spec.out`` if set.

    The output file is opened before any computation so a bad path fails fast.
    """
    handle = open(spec.out, "w", newline="") if spec.out is not None else None
    try:
        if spec.kind == "complexity_report":
            text = _complexity_csv(config)
        else:
            baselines = spec.baselines
            if spec.kind == "iteration_trace" and spec.baselines == BASELINES:
                baselines = spec.iteration_baselines
            tasks = [(spec.kind, v, t, config, baselines, spec.sweep_name)
                     for v in spec.values for t in range(spec.trials)]
            if spec.workers > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                    chunks = list(pool.map(_task, tasks))
            else:
                chunks = [_task(t) for t in tasks]
            text = format_rows([row for chunk in chunks for row in chunk])
        if handle is not None:
            handle.write(text)
        return text
    finally:
        if handle is not None:
            handle.close()
