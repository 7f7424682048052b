"""Command line interface.

Four subcommands::

    ratelab run        run a solver on a gallery problem and certify decay
    ratelab tightness  run the monomial recursion against its predicted rate
    ratelab flow       integrate the model gradient flow against closed form
    ratelab check      audit an existing trace CSV

Each prints a flat ``key=value`` summary document to stdout and exits with
0 when every verdict passed, 1 when a verdict failed, 2 on invalid
configuration, and 3 when a run aborted or artifacts could not be written.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .experiments import (
    CheckConfig,
    FlowConfig,
    RunConfig,
    TightnessConfig,
    format_summary,
    run_check,
    run_experiment,
    run_flow,
    run_tightness,
    write_run_artifacts,
    write_tightness_artifacts,
)
from .solvers import SolverAbort

EXIT_PASS = 0
EXIT_VERDICT_FAIL = 1
EXIT_BAD_CONFIG = 2
EXIT_ABORT = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratelab",
        description="first-order solvers with empirical decay certification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a solver and certify its gap decay")
    run.add_argument("--problem", required=True, help="e.g. quadratic:dim=50,null=10,seed=7")
    run.add_argument("--solver", required=True, help="e.g. gd_fixed:alpha=inv_L")
    run.add_argument("--budget", required=True, help="iterations per trace (>= 100)")
    run.add_argument("--seeds", default="0:1", help="'a:b' range or comma list (default 0:1)")
    run.add_argument("--x0-seed", default="0", help="seed for the shared starting point")
    run.add_argument("--stride", default="pow2", help="snapshot grid: pow2, all, or an int")
    run.add_argument("--fstar", default="auto", help="reference optimum or 'auto'")
    run.add_argument("--tail-threshold", default="auto", help="tail ratio bound or 'auto'")
    run.add_argument("--out", default=None, help="directory for trace/snapshot/summary files")

    tight = sub.add_parser("tightness", help="monomial recursion vs predicted decay")
    tight.add_argument("--p", default="4", help="even degree >= 4")
    tight.add_argument("--alpha", default="inv_L", help="step size (sugar allowed, L = p(p-1))")
    tight.add_argument("--budget", default="100000")
    tight.add_argument("--fit-lo", default="1000")
    tight.add_argument("--fit-hi", default="100000")
    tight.add_argument("--x0", default="1.0")
    tight.add_argument("--exp-tol", default="0.05", help="allowed exponent error")
    tight.add_argument("--const-rtol", default="0.1", help="allowed constant relative error")
    tight.add_argument("--out", default=None)

    flow = sub.add_parser("flow", help="integrate the model flow vs closed form")
    flow.add_argument("--p", default="4")
    flow.add_argument("--t0", default="2.0")
    flow.add_argument("--t1", default="100.0")
    flow.add_argument("--steps", default="100000")
    flow.add_argument("--tol", default="1e-6", help="allowed max relative deviation")
    flow.add_argument("--out", default=None)

    check = sub.add_parser("check", help="audit an existing trace CSV")
    check.add_argument("trace", help="path to a trace file")
    check.add_argument("--fstar", default="column", help="'column' to use the delta column")
    check.add_argument("--gamma", default="", help="replay the decrease condition at this gamma")
    check.add_argument("--growth-frac", default="0.05")
    check.add_argument("--tail-factor", default="0.05")
    check.add_argument("--out", default=None)

    return parser


def _write_summary_file(out: Optional[str], text: str) -> None:
    if out is None:
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / "summary.txt").write_text(text)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already; normalize other codes
        return EXIT_BAD_CONFIG if exc.code not in (0,) else 0

    try:
        if args.command == "run":
            cfg = RunConfig(
                problem=args.problem,
                solver=args.solver,
                budget=args.budget,
                seeds=args.seeds,
                x0_seed=args.x0_seed,
                stride=args.stride,
                fstar=args.fstar,
                tail_threshold=args.tail_threshold,
            )
            result = run_experiment(cfg)
            text = format_summary(result.summary)
            sys.stdout.write(text)
            if args.out is not None:
                write_run_artifacts(cfg, result, args.out)
            return EXIT_PASS if result.passed else EXIT_VERDICT_FAIL

        if args.command == "tightness":
            tcfg = TightnessConfig(
                p=args.p,
                alpha=args.alpha,
                budget=args.budget,
                fit_lo=args.fit_lo,
                fit_hi=args.fit_hi,
                x0=args.x0,
                exp_tol=args.exp_tol,
                const_rtol=args.const_rtol,
            )
            tres = run_tightness(tcfg)
            text = format_summary(tres.summary)
            sys.stdout.write(text)
            if args.out is not None:
                write_tightness_artifacts(tcfg, tres, args.out)
            return EXIT_PASS if tres.passed else EXIT_VERDICT_FAIL

        if args.command == "flow":
            fcfg = FlowConfig(
                p=args.p, t0=args.t0, t1=args.t1, steps=args.steps, tol=args.tol
            )
            fres = run_flow(fcfg)
            text = format_summary(fres.summary)
            sys.stdout.write(text)
            _write_summary_file(args.out, text)
            return EXIT_PASS if fres.passed else EXIT_VERDICT_FAIL

        if args.command == "check":
            ccfg = CheckConfig(
                trace=args.trace,
                fstar=args.fstar,
                gamma=args.gamma,
                growth_frac=args.growth_frac,
                tail_factor=args.tail_factor,
            )
            cres = run_check(ccfg)
            text = format_summary(cres.summary)
            sys.stdout.write(text)
            _write_summary_file(args.out, text)
            return EXIT_PASS if cres.passed else EXIT_VERDICT_FAIL

        raise ValueError(f"unknown command {args.command!r}")

    except SolverAbort as exc:
        sys.stderr.write(f"aborted: {exc}\n")
        return EXIT_ABORT
    except FileNotFoundError as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_BAD_CONFIG
    except OSError as exc:
        sys.stderr.write(f"cannot write artifacts: {exc}\n")
        return EXIT_ABORT
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
