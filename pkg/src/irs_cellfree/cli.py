"""Command-line entry point: ``run`` an experiment sweep or print the ``complexity`` table."""
from __future__ import annotations

import argparse
import json
import sys

from .complexity import ComplexityInputs, complexity_report, format_percent, format_sci
from .errors import SolverFailure
from .experiments import KINDS, ExperimentSpec, run_experiment
from .joint import BASELINES
from .scenario import ConfigError, SystemConfig, load_config

EXIT_SOLVER = 2
EXIT_CONFIG = 3
EXIT_IO = 4


def _error_line(kind: str, exc: Exception, **extra) -> str:
    payload = {"error": kind, "message": str(exc), **extra}
    return json.dumps(payload, sort_keys=True, default=str)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irs-cellfree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep and write CSV")
    run.add_argument("--config", help="scenario YAML file (defaults to the full-scale scenario)")
    run.add_argument("--experiment", required=True, choices=KINDS)
    run.add_argument("--out", required=True, help="output CSV path")
    run.add_argument("--seed", type=int, default=None, help="base seed (overrides the config)")
    run.add_argument("--trials", type=int, default=20)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--values", nargs="+", default=None, help="sweep values (defaults per experiment)")
    run.add_argument("--baselines", nargs="+", default=None, choices=BASELINES)

    cx = sub.add_parser("complexity", help="operation counts of the joint design vs the reference method")
    defaults = ComplexityInputs()
    for name, value in vars(defaults).items():
        cx.add_argument("--" + name.replace("_", "-"), type=int, default=value)
    cx.add_argument("--json", action="store_true", help="print a JSON object instead of text")
    return parser


def _parse_values(kind: str, raw):
    if raw is None:
        return ()
    if kind == "ee_grid":
        return tuple(raw)
    out = []
    for v in raw:
        f = float(v)
        out.append(int(f) if f.is_integer() and kind in ("element_sweep", "iteration_trace") else f)
    return tuple(out)


def cmd_run(args) -> int:
    config = load_config(args.config, seed=args.seed) if args.config else SystemConfig()
    if args.config is None and args.seed is not None:
        config = config.replace(rng_seed=args.seed)
    spec = ExperimentSpec(
        kind=args.experiment,
        values=_parse_values(args.experiment, args.values),
        trials=args.trials,
        baselines=tuple(args.baselines) if args.baselines else BASELINES,
        out=args.out,
        workers=args.workers,
    )
    run_experiment(spec, config)
    return 0


def cmd_complexity(args) -> int:
    fields = vars(ComplexityInputs())
    inp = ComplexityInputs(**{k: getattr(args, k) for k in fields})
    rep = complexity_report(inp)
    if args.json:
        print(json.dumps({
            "rows": rep.rows,
            "overall": rep.overall,
            "overall_sci": format_sci(rep.overall),
            "reference": rep.reference,
            "reference_sci": format_sci(rep.reference),
            "ratio": format_percent(rep.ratio),
        }, sort_keys=True))
    else:
        print("\n".join(rep.lines()))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_complexity(args)
    except SolverFailure as exc:
        print(_error_line("solver_failure", exc, context=exc.context), file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError) as exc:
        print(_error_line("config_error", exc), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(_error_line("io_error", exc), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
