"""Backend benchmark: compiled kernels vs the interpreted fallback.

Run as ``python -m ratelab.bench`` (add ``--quick`` for a faster pass).
Builds both kernel sets regardless of the active backend, times matched
workloads, and verifies the outputs agree bitwise while at it.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from ._backend import numba_available
from .kernels import build_kernels
from .problems import make_quadratic


def _workloads(quick: bool):
    scale = 10 if quick else 1
    prob = make_quadratic(
        np.geomspace(1e-2, 1e2, 40), null_dim=10, rotation_seed=7
    )
    qs = prob.smooth.quadratic
    a, b = qs.matrix, qs.offset
    n = b.size
    rng = np.random.Generator(np.random.PCG64(0))
    x0 = rng.standard_normal(n)
    L = prob.smooth.lipschitz
    snap = np.array([0, 1], dtype=np.int64)
    zeros = np.zeros(n)
    budget_gd = 100_000 // scale
    budget_cd = 400_000 // scale
    uniforms = np.random.Generator(np.random.PCG64(1)).random(budget_cd)
    cum = np.cumsum(np.full(n, 1.0 / n))
    cum[-1] = 1.0
    return [
        (
            f"gd_fixed {n}-dim x{budget_gd}",
            "gd_fixed_run",
            (a, b, 1.0 / L, x0, budget_gd, snap, False, 1e-14),
        ),
        (
            f"linesearch l1 {n}-dim x{budget_gd // 10}",
            "linesearch_run",
            (a, b, 1, 0.1, zeros, zeros, 0.5, 4.0 / L, 0.5 / L, 0.5, True,
             x0, budget_gd // 10, snap, False, 1e-14),
        ),
        (
            f"cd {n}-dim x{budget_cd}",
            "cd_run",
            (a, b, 0, 0.0, zeros, zeros, prob.smooth.coord_lipschitz, cum,
             uniforms, x0, budget_cd, snap),
        ),
        (
            f"monomial p=4 x{budget_gd * 10}",
            "monomial_run",
            (4, 1.0 / 12.0, 1.0, budget_gd * 10),
        ),
    ]


def _time_call(fn, args, repeats: int = 3) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m ratelab.bench",
        description="time compiled kernels against the interpreted fallback",
    )
    parser.add_argument("--quick", action="store_true", help="smaller budgets")
    args = parser.parse_args(argv)

    if not numba_available():
        sys.stderr.write("numba is not importable; nothing to compare\n")
        return 1

    numpy_kernels = build_kernels(False)
    numba_kernels = build_kernels(True)
    rows = []
    mismatched = []
    for label, name, call_args in _workloads(args.quick):
        jit_fn = numba_kernels[name]
        py_fn = numpy_kernels[name]
        jit_fn(*call_args)  # compile before timing
        t_jit = _time_call(jit_fn, call_args)
        t_py = _time_call(py_fn, call_args)
        out_jit = jit_fn(*call_args)
        out_py = py_fn(*call_args)
        same = all(
            np.array_equal(np.asarray(u), np.asarray(v))
            for u, v in zip(out_jit, out_py)
        )
        if not same:
            mismatched.append(label)
        rows.append((label, t_jit, t_py, same))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}  identical")
    for label, t_jit, t_py, same in rows:
        print(
            f"{label:<{width}}  {t_jit * 1e3:>8.2f}ms  {t_py * 1e3:>8.2f}ms"
            f"  {t_py / t_jit:>7.1f}x  {'yes' if same else 'NO'}"
        )
    if mismatched:
        print(f"\nbitwise mismatch in: {', '.join(mismatched)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
