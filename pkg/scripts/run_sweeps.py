"""Run every sweep for one scenario file and write one CSV per experiment.

Example (desk scale, a few minutes):
    python scripts/run_sweeps.py --config configs/reduced.yaml --trials 5 --out results/
"""
import argparse
import time
from pathlib import Path

from irs_cellfree.experiments import DEFAULT_SWEEPS, ExperimentSpec, run_experiment
from irs_cellfree.scenario import SystemConfig, load_config

SWEEPS = ("distance_sweep", "iteration_trace", "csi_sweep", "power_sweep", "element_sweep", "ee_grid")


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default="results")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--only", nargs="+", choices=SWEEPS, default=SWEEPS)
    args = parser.parse_args()

    config = load_config(args.config, seed=args.seed) if args.config else SystemConfig()
    if args.config is None and args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind in args.only:
        t0 = time.time()
        baselines = ("optimized",) if kind == "ee_grid" else None
        spec = ExperimentSpec(kind, values=DEFAULT_SWEEPS[kind], trials=args.trials, out=out_dir / f"{kind}.csv",
                              workers=args.workers, **({"baselines": baselines} if baselines else {}))
        run_experiment(spec, config)
        print(f"{kind}: {spec.out} ({time.time() - t0:.1f}s)")


if __name__ == "__main__":
    main()
