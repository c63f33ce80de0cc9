"""Joint precoding for IRS-assisted wideband cell-free networks with Lorentzian metasurfaces."""
from .errors import SolverFailure
from .joint import joint_optimize, run_baseline
from .scenario import ConfigError, SystemConfig, load_config

__all__ = ["SolverFailure", "ConfigError", "SystemConfig", "load_config", "joint_optimize", "run_baseline"]
__version__ = "0.1.0"
