"""Worst-case decay experiments on the scalar monomial objective.

``f(x) = x**p`` with even ``p >= 4`` is smooth on ``|x| <= 1`` with
``L = p (p - 1)``, and gradient descent from ``x0 in (0, 1]`` obeys the
closed-form recursion ``x_{k+1} = x_k (1 - p alpha x_k**(p-2))``. The gap
``Delta_k = x_k**p`` then decays like ``C / k**(p/(p-2))``: the scaled gap
``k Delta_k`` still vanishes, but slower than any fixed power below
``p/(p-2)``; pushing ``p`` up moves the exponent arbitrarily close to 1.
These runs give the library's rate fits a family of known-answer targets.

The continuous-time analogue ``x'(t) = -alpha p x**(p-1)`` with
``alpha = 1/(p (p-2))`` has the exact solution ``x(t) = t**(-theta)``,
``theta = 1/(p-2)``. Integrating it numerically and comparing against the
closed form validates the integrator the same way the recursion validates
the discrete fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .diagnostics import GapSequence, RateReport, rate_report
from .kernels import KERNELS, STATUS_EARLY, STATUS_SAFEGUARD
from .solvers import SolverAbort, Trace, snapshot_grid
from .problems import Vector


def _check_degree(p: int) -> int:
    if not isinstance(p, (int, np.integer)) or p < 4 or p % 2 != 0:
        raise ValueError("p must be an even integer >= 4")
    return int(p)


def predicted_exponent(p: int) -> float:
    """Decay exponent of the gap: Delta_k ~ k**(-p/(p-2))."""
    p = _check_degree(p)
    return p / (p - 2.0)


def predicted_gap_constant(p: int, alpha: float) -> float:
    """Leading constant: Delta_k ~ C k**(-p/(p-2)) with
    C = (1 / ((p-2) p alpha))**(p/(p-2))."""
    p = _check_degree(p)
    if not (0 < alpha < 2.0 / (p * (p - 1))):
        raise ValueError("alpha must lie in (0, 2/(p(p-1)))")
    base = 1.0 / ((p - 2.0) * p * alpha)
    return base ** (p / (p - 2.0))


def min_even_degree(epsilon: float) -> int:
    """Smallest even degree whose gap exponent is within ``epsilon`` of 1.

    Solves ``p/(p-2) <= 1 + epsilon`` over even ``p >= 4``, i.e.
    ``p >= 2 (1 + epsilon) / epsilon``.
    """
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValueError("epsilon must be a positive finite float")
    q = 2.0 * (1.0 + epsilon) / epsilon
    p = int(math.ceil(q - 1e-12 * max(1.0, q)))
    if p % 2 != 0:
        p += 1
    return max(4, p)


@dataclass(frozen=True)
class MonomialExperiment:
    """Fixed-step descent run on f(x) = x**p from x0 in (0, 1]."""

    p: int
    alpha: float
    budget: int
    x0: float = 1.0
    fit_window: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        p = _check_degree(self.p)
        if not (0 < self.alpha < 2.0 / (p * (p - 1))):
            raise ValueError("alpha must lie in (0, 2/(p(p-1)))")
        if not (0 < self.x0 <= 1.0):
            raise ValueError("x0 must lie in (0, 1]")
        if not isinstance(self.budget, (int, np.integer)) or self.budget < 1:
            raise ValueError("budget must be a positive integer")

    def resolved_window(self) -> Tuple[int, int]:
        if self.fit_window is not None:
            return self.fit_window
        return (max(10, self.budget // 100), self.budget)


def run_monomial(exp: MonomialExperiment) -> Tuple[Trace, RateReport]:
    """Run the recursion, package it as a trace, and fit the decay rate.

    A safeguard aborts if any step leaves the contraction window
    ``x_{k+1} in [(2/3) x_k, x_k)`` that the fixed step guarantees on
    (0, 1]; hitting it means ``alpha`` is too aggressive for this degree.
    """
    xs, m, status = KERNELS["monomial_run"](
        int(exp.p), float(exp.alpha), float(exp.x0), int(exp.budget)
    )
    if status == STATUS_SAFEGUARD:
        raise SolverAbort(
            f"monomial recursion left the contraction window at iteration {m}; "
            f"alpha={exp.alpha} is too large for p={exp.p}"
        )
    xs = xs[: m + 1]
    f = xs ** exp.p
    d = np.diff(xs)
    snap_ks = snapshot_grid(m, "pow2")
    trace = Trace(
        k=np.arange(m + 1, dtype=np.int64),
        f=f,
        psi=np.zeros(m + 1),
        step=np.full(m, float(exp.alpha)),
        coord=None,
        dsq=d * d,
        snap_k=snap_ks,
        snap_x=xs[snap_ks][:, None],
        problem_id=f"power:p={exp.p}",
        solver_id=f"monomial:alpha={exp.alpha!r}",
        seed=None,
        status="early-stop" if status == STATUS_EARLY else "budget",
    )
    gaps = GapSequence.from_trace(trace, 0.0)
    lo, hi = exp.resolved_window()
    hi = min(hi, m)
    window = (lo, hi) if hi >= 10 * lo else None
    report = rate_report(gaps, fit_window=window)
    return trace, report


@dataclass(frozen=True)
class GradientFlowExperiment:
    """RK4 integration of x' = -alpha p x**(p-1) against the closed form."""

    p: int
    t0: float
    t1: float
    steps: int

    def __post_init__(self) -> None:
        p = _check_degree(self.p)
        lo = (p - 1.0) / (p - 2.0)
        if not (math.isfinite(self.t0) and self.t0 >= lo * (1 - 1e-12)):
            raise ValueError(f"t0 must be >= (p-1)/(p-2) = {lo}")
        if not (math.isfinite(self.t1) and self.t1 > self.t0):
            raise ValueError("t1 must exceed t0")
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ValueError("steps must be a positive integer")

    @property
    def theta(self) -> float:
        return 1.0 / (self.p - 2.0)

    @property
    def alpha(self) -> float:
        return 1.0 / (self.p * (self.p - 2.0))


@dataclass(frozen=True)
class FlowResult:
    """Integrated trajectory with its exact reference."""

    t: Vector
    x: Vector
    exact: Vector
    max_rel_dev: float


def run_gradient_flow(exp: GradientFlowExperiment) -> FlowResult:
    """Integrate the flow and compare against x(t) = t**(-theta).

    Two guards reject under-resolved grids before integrating: the linear
    stability bound ``h |f'(x0)| <= 2.5`` for the classical fourth-order
    scheme, and a step-doubling probe over the first few steps whose
    disagreement must stay below 1e-3 relative.
    """
    h = (exp.t1 - exp.t0) / exp.steps
    x0 = exp.t0 ** (-exp.theta)
    c = exp.alpha * exp.p
    stiffness = h * c * (exp.p - 1) * x0 ** (exp.p - 2)
    if stiffness > 2.5:
        raise ValueError(
            f"step h={h:.3g} is unstable for this flow (h|f'| = {stiffness:.3g} > 2.5); "
            "increase steps"
        )
    probe_n = min(10, exp.steps)
    coarse = KERNELS["rk4_run"](int(exp.p), c, x0, exp.t0, h, probe_n)
    fine = KERNELS["rk4_run"](int(exp.p), c, x0, exp.t0, h / 2.0, 2 * probe_n)
    ref = fine[-1]
    if abs(coarse[-1] - ref) > 1e-3 * max(abs(ref), 1e-300):
        raise ValueError(
            "step-doubling probe shows the grid is too coarse for this flow; "
            "increase steps"
        )
    xs = KERNELS["rk4_run"](int(exp.p), c, x0, exp.t0, h, int(exp.steps))
    ts = exp.t0 + h * np.arange(exp.steps + 1)
    exact = ts ** (-exp.theta)
    rel = np.abs(xs - exact) / exact
    return FlowResult(t=ts, x=xs, exact=exact, max_rel_dev=float(np.max(rel)))
