"""Command-line harness: solve one scenario, sweep a parameter, or validate
a config/layout file."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .harness import ALL_SCHEMES, SWEEP_PARAMETERS, run_scheme, sample_scenario, sweep
from .inner import SolveSettings
from .io import load_config, write_summary_csv, write_sweep_csv, write_trace_csv
from .model import SystemConfig, validate_layout


def _settings(args) -> SolveSettings:
    return SolveSettings(
        surrogate_rel_tol=args.inner_tol,
        max_inner_iters=args.max_inner,
        outer_rel_tol=args.outer_tol,
        max_outer_iters=args.max_outer,
    )


def _config(args) -> SystemConfig:
    return load_config(args.config) if args.config else SystemConfig()


def _add_common(p):
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--max-outer", type=int, default=50, dest="max_outer")
    p.add_argument("--outer-tol", type=float, default=1e-4, dest="outer_tol")
    p.add_argument("--max-inner", type=int, default=100, dest="max_inner")
    p.add_argument("--inner-tol", type=float, default=1e-4, dest="inner_tol")


def _parse_seeds(text):
    return [int(s) for s in text.split(",") if s]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="passwipt",
        description="Joint beamforming and pinching-antenna placement for SWIPT downlinks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one scenario and write its trace")
    _add_common(p_solve)
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--scheme", choices=ALL_SCHEMES, default="proposed")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep and write CSVs")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", choices=SWEEP_PARAMETERS, required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated ascending values")
    p_sweep.add_argument("--seeds", default="0,1,2,3", help="comma-separated seeds")
    p_sweep.add_argument("--schemes", default=",".join(ALL_SCHEMES))
    p_sweep.add_argument("--workers", type=int, default=1)

    p_val = sub.add_parser("validate", help="check a config file and optional layout")
    p_val.add_argument("--config", type=Path, required=True)
    p_val.add_argument("--layout", type=Path, default=None, help="JSON M x N position matrix")

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            config = load_config(args.config)
        except ConfigError as exc:
            print(f"config INVALID: {exc}")
            return 1
        print("config OK")
        if args.layout:
            layout = np.array(json.loads(args.layout.read_text()), dtype=float)
            violations = validate_layout(layout, config)
            if violations:
                for v in violations:
                    print(f"layout violation - {v}")
                return 1
            print("layout OK")
        return 0

    config = _config(args)
    settings = _settings(args)

    if args.command == "solve":
        scenario = sample_scenario(args.seed, config)
        run = run_scheme(args.scheme, scenario, settings)
        if run.error is not None:
            print(f"{args.scheme} seed={args.seed}: FAILED ({run.error})")
            return 1
        path = write_trace_csv(run.trace, args.out / f"trace_{args.scheme}_seed{args.seed}.csv")
        print(
            f"{args.scheme} seed={args.seed}: sum_rate={run.sum_rate:.6g} bits/s/Hz "
            f"power={run.power:.6g} W margin={run.energy_margin:.6g} W "
            f"feasible={run.feasible} converged={run.converged} "
            f"iters={run.iterations} -> {path}"
        )
        return 0

    values = [float(v) for v in args.values.split(",") if v]
    seeds = _parse_seeds(args.seeds)
    schemes = [s for s in args.schemes.split(",") if s]
    rows, summary = sweep(
        args.param, values, seeds, config=config, schemes=schemes,
        settings=settings, workers=args.workers,
    )
    out = args.out
    results_path = write_sweep_csv(rows, out / f"sweep_{args.param}.csv")
    summary_path = write_summary_csv(summary, out / f"sweep_{args.param}_summary.csv")
    for row in rows:
        if row.trace is not None:
            write_trace_csv(
                row.trace,
                out / f"trace_{args.param}={row.value:.12g}_seed{row.seed}_{row.scheme}.csv",
            )
    print(f"wrote {results_path} and {summary_path} ({len(rows)} runs)")
    for s in summary:
        print(
            f"  {s.parameter}={s.value:.6g} {s.scheme}: mean sum_rate="
            f"{s.mean_sum_rate:.6g} over {s.n_runs} runs "
            f"({s.n_errors} errors, {s.n_feasible} feasible)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
