"""First-order solvers with per-iteration traces.

Six methods share one trace schema: full gradient descent with a fixed step
or a backtracking line search, stochastic coordinate descent, and the
proximal variants of all three. Each run records, for every iteration k, the
objective split ``(f, psi)``, the action taken (step size or coordinate
index), and the squared step norm, plus full iterate snapshots on a
configurable grid (powers of two by default).

Determinism: a run is a pure function of (problem, solver configuration,
seed, budget). Stochastic solvers draw all uniforms up front from
``numpy.random.Generator(PCG64(seed))`` and select coordinates by
inverse-CDF lookup, so traces are bit-reproducible.

Structured problems (dense quadratic smooth term, l1/box/no regularizer) run
through the compiled kernels in :mod:`ratelab.kernels`; anything else runs
through the generic oracle path. ``engine="generic"`` forces the oracle path
for testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .kernels import (
    KERNELS,
    REG_BOX,
    REG_L1,
    REG_NONE,
    STATUS_BUDGET,
    STATUS_EARLY,
    STATUS_NONFINITE,
)
from .problems import (
    ProblemInstance,
    Regularizer,
    Vector,
    objective_value,
    prox,
)


class SolverAbort(RuntimeError):
    """Raised when a run cannot continue (nonfinite values, domain exit)."""


@dataclass(frozen=True)
class FixedStep:
    """Constant step size rule."""

    alpha: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be a positive finite float")


@dataclass(frozen=True)
class LineSearchRule:
    """Backtracking sufficient-decrease rule.

    Accepted steps satisfy
    ``F(x + d) <= F(x) - (gamma / (2 alpha)) ||d||^2`` and stay in
    ``[c2, c1]``.  Trials start from ``c1`` (or a curvature-ratio guess when
    ``init="bb"``, clamped into ``[c2, c1]``) and shrink geometrically; once a
    trial would drop to ``c2`` or below, ``c2`` itself is used without a
    condition check, which is valid whenever ``c2 <= (2 - gamma) / L``.
    """

    gamma: float
    c1: float
    c2: float
    shrink: float = 0.5
    init: str = "constant"

    def __post_init__(self) -> None:
        if not (0 < self.gamma <= 1):
            raise ValueError("gamma must lie in (0, 1]")
        if not (math.isfinite(self.c2) and self.c2 > 0):
            raise ValueError("c2 must be a positive finite float")
        if not (math.isfinite(self.c1) and self.c1 >= self.c2):
            raise ValueError("c1 must be finite and >= c2")
        if not (0 < self.shrink < 1):
            raise ValueError("shrink must lie in (0, 1)")
        if self.init not in ("constant", "bb"):
            raise ValueError('init must be "constant" or "bb"')

    def validate_for(self, lipschitz: float) -> None:
        limit = (2.0 - self.gamma) / lipschitz
        if self.c2 > limit * (1 + 1e-12):
            raise ValueError(
                f"c2={self.c2} exceeds (2 - gamma)/L = {limit}; the floor step "
                "would not be guaranteed to satisfy the decrease condition"
            )


StepRule = Union[FixedStep, LineSearchRule]


@dataclass(frozen=True)
class SamplingDistribution:
    """Fixed coordinate-sampling distribution with strictly positive mass."""

    probabilities: Vector
    p_min: float = field(init=False)
    cum: Vector = field(init=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a nonempty 1-d array")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("probabilities must be finite and strictly positive")
        if abs(float(np.sum(p)) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        cum = np.cumsum(p)
        cum[-1] = 1.0
        object.__setattr__(self, "probabilities", p.copy())
        object.__setattr__(self, "p_min", float(np.min(p)))
        object.__setattr__(self, "cum", cum)

    @property
    def dim(self) -> int:
        return int(self.probabilities.size)

    @classmethod
    def uniform(cls, n: int) -> "SamplingDistribution":
        if n <= 0:
            raise ValueError("n must be positive")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, weights, floor: float = 0.0) -> "SamplingDistribution":
        """Probabilities proportional to ``weights``, mixed toward uniform so
        every entry is at least ``floor``."""
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or not np.all(np.isfinite(w)) or np.sum(w) <= 0:
            raise ValueError("weights must be nonnegative, finite, not all zero")
        n = w.size
        if floor < 0 or floor * n > 1.0 + 1e-12:
            raise ValueError("floor must satisfy 0 <= floor <= 1/n")
        p = floor + (1.0 - n * floor) * (w / np.sum(w))
        p /= np.sum(p)
        return cls(p)


def sample_index(dist: SamplingDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw: the smallest i with u < cum[i]; advances ``rng``."""
    u = rng.random()
    i = int(np.searchsorted(dist.cum, u, side="right"))
    return min(i, dist.dim - 1)


@dataclass(frozen=True)
class Trace:
    """Complete record of one solver run.

    ``k``, ``f``, ``psi`` have one entry per iterate (length m+1 for m
    completed steps); ``step`` or ``coord`` and ``dsq`` describe the action
    taken at each iterate (length m). ``snap_k``/``snap_x`` are full iterate
    snapshots; the first row is x0 and the last row is the final iterate.
    """

    k: Vector
    f: Vector
    psi: Vector
    step: Optional[Vector]
    coord: Optional[Vector]
    dsq: Vector
    snap_k: Vector
    snap_x: Vector
    problem_id: str
    solver_id: str
    seed: Optional[int]
    status: str

    @property
    def objective(self) -> Vector:
        return self.f + self.psi

    @property
    def steps_taken(self) -> int:
        return int(self.k[-1])

    @property
    def final_x(self) -> Vector:
        return self.snap_x[-1]


def snapshot_grid(budget: int, stride="pow2") -> Vector:
    """Snapshot iteration indices: powers of two, everything, or a fixed step."""
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if isinstance(stride, str) and stride == "all":
        return np.arange(budget + 1, dtype=np.int64)
    if isinstance(stride, str) and stride == "pow2":
        ks = {0, budget}
        j = 1
        while j <= budget:
            ks.add(j)
            j *= 2
        return np.array(sorted(ks), dtype=np.int64)
    s = int(stride)
    if s <= 0:
        raise ValueError('stride must be "pow2", "all", or a positive integer')
    ks = set(range(0, budget + 1, s))
    ks.add(budget)
    return np.array(sorted(ks), dtype=np.int64)


_STATUS_NAMES = {STATUS_BUDGET: "budget", STATUS_EARLY: "early-stop"}


def _check_x0(problem: ProblemInstance, x0) -> Vector:
    x = np.asarray(x0, dtype=np.float64).copy()
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have shape ({problem.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    tr = problem.smooth.trust_radius
    if tr is not None and float(np.max(np.abs(x))) > tr:
        raise ValueError(f"x0 lies outside the validity region max|x_i| <= {tr}")
    if problem.regularizer is not None:
        if math.isinf(float(problem.regularizer.value_fn(x))):
            raise ValueError("x0 is infeasible for the regularizer")
    return x


def _check_budget(budget) -> int:
    if not isinstance(budget, (int, np.integer)) or budget < 0:
        raise ValueError("budget must be a nonnegative integer")
    return int(budget)


def _kernel_form(problem: ProblemInstance):
    qs = problem.smooth.quadratic
    if qs is None:
        return None
    n = problem.dim
    reg = problem.regularizer
    if reg is None:
        return qs.matrix, qs.offset, REG_NONE, 0.0, np.zeros(n), np.zeros(n)
    kf = reg.kernel_form
    if kf is None:
        return None
    if kf[0] == "l1":
        return qs.matrix, qs.offset, REG_L1, float(kf[1]), np.zeros(n), np.zeros(n)
    if kf[0] == "box":
        lo = np.asarray(kf[1], dtype=np.float64)
        hi = np.asarray(kf[2], dtype=np.float64)
        if lo.size == 1:
            lo = np.full(n, lo[0])
            hi = np.full(n, hi[0])
        if lo.shape != (n,):
            return None
        return qs.matrix, qs.offset, REG_BOX, 0.0, lo, hi
    return None


def _use_kernel(problem: ProblemInstance, engine: str) -> Optional[tuple]:
    if engine not in ("auto", "kernel", "generic"):
        raise ValueError('engine must be "auto", "kernel", or "generic"')
    form = _kernel_form(problem)
    if engine == "kernel" and form is None:
        raise ValueError("problem has no kernel form; use engine='auto' or 'generic'")
    if engine == "generic":
        return None
    return form


def _assemble(
    problem: ProblemInstance,
    solver_id: str,
    seed: Optional[int],
    snap_ks: Vector,
    f: Vector,
    psi: Optional[Vector],
    steps: Optional[Vector],
    coords: Optional[Vector],
    dsq: Vector,
    snap_x: Vector,
    sp: int,
    m: int,
    status: int,
    x_final: Vector,
) -> Trace:
    if status == STATUS_NONFINITE:
        raise SolverAbort(
            f"{solver_id}: nonfinite objective at iteration {m} on {problem.problem_id}"
        )
    ks = snap_ks[:sp]
    xs = snap_x[:sp]
    if ks.size == 0 or ks[-1] != m:
        ks = np.append(ks, np.int64(m))
        xs = np.vstack([xs, x_final[None, :]])
    return Trace(
        k=np.arange(m + 1, dtype=np.int64),
        f=f[: m + 1],
        psi=np.zeros(m + 1) if psi is None else psi[: m + 1],
        step=None if steps is None else steps[:m],
        coord=None if coords is None else coords[:m],
        dsq=dsq[:m],
        snap_k=ks,
        snap_x=xs,
        problem_id=problem.problem_id,
        solver_id=solver_id,
        seed=seed,
        status=_STATUS_NAMES.get(status, str(status)),
    )


def _trivial_trace(
    problem: ProblemInstance,
    solver_id: str,
    x0: Vector,
    *,
    coordwise: bool = False,
    seed: Optional[int] = None,
) -> Trace:
    f0 = float(problem.smooth.value_fn(x0))
    return Trace(
        k=np.zeros(1, dtype=np.int64),
        f=np.array([f0]),
        psi=np.zeros(1),
        step=None if coordwise else np.empty(0),
        coord=np.empty(0, dtype=np.int64) if coordwise else None,
        dsq=np.empty(0),
        snap_k=np.zeros(1, dtype=np.int64),
        snap_x=x0[None, :].copy(),
        problem_id=problem.problem_id,
        solver_id=solver_id,
        seed=seed,
        status="optimal-start",
    )


def _trust_check(problem: ProblemInstance, x: Vector, k: int) -> None:
    tr = problem.smooth.trust_radius
    if tr is not None and float(np.max(np.abs(x))) > tr * (1 + 1e-9):
        raise SolverAbort(
            f"iterate left the validity region max|x_i| <= {tr} at iteration {k}"
        )


# ---------------------------------------------------------------- generic path


def _generic_gd_fixed(problem, alpha, x0, budget, snap_ks, early, tol):
    sm = problem.smooth
    x = x0.copy()
    f = np.empty(budget + 1)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.size, x.size))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    for k in range(budget):
        g = np.asarray(sm.grad_fn(x), dtype=np.float64)
        fk = float(sm.value_fn(x))
        f[k] = fk
        if not np.isfinite(fk):
            return f, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        if early and float(g @ g) <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        xn = x - alpha * g
        d = xn - x
        dsq[k] = float(d @ d)
        x = xn
        _trust_check(problem, x, k)
    if status == STATUS_BUDGET:
        fb = float(sm.value_fn(x))
        f[budget] = fb
        if not np.isfinite(fb):
            return f, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, dsq, snap_x, sp, m, status, x


def _generic_prox_fixed(problem, lbar, x0, budget, snap_ks, early, tol):
    sm = problem.smooth
    reg = problem.regularizer
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.size, x.size))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    lam = 1.0 / lbar
    for k in range(budget):
        g = np.asarray(sm.grad_fn(x), dtype=np.float64)
        fk = float(sm.value_fn(x))
        pk = float(reg.value_fn(x)) if reg is not None else 0.0
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fk + pk):
            return f, psi, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        y = x - g / lbar
        xn = reg.prox_fn(y, lam) if reg is not None else y
        d = xn - x
        ds = float(d @ d)
        if early and ds <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        dsq[k] = ds
        x = xn
        _trust_check(problem, x, k)
    if status == STATUS_BUDGET:
        fb = float(sm.value_fn(x))
        pb = float(reg.value_fn(x)) if reg is not None else 0.0
        f[budget] = fb
        psi[budget] = pb
        if not np.isfinite(fb + pb):
            return f, psi, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, psi, dsq, snap_x, sp, m, status, x


def _ladder(problem, x, g, fobj, rule: LineSearchRule, prev):
    """Shared backtracking ladder; returns (alpha, candidate, dsq, F_candidate)."""
    reg = problem.regularizer
    if rule.init == "bb" and prev is not None:
        prev_x, prev_g = prev
        s = x - prev_x
        gd = g - prev_g
        den = float(s @ gd)
        if den > 0.0:
            alpha = float(s @ s) / den
            alpha = min(max(alpha, rule.c2), rule.c1)
        else:
            alpha = rule.c1
    else:
        alpha = rule.c1
    slack = 1e-12 * max(1.0, abs(fobj))
    floor = alpha <= rule.c2
    while True:
        y = x - alpha * g
        cand = reg.prox_fn(y, alpha) if reg is not None else y
        d = cand - x
        ds = float(d @ d)
        fc = objective_value(problem, cand)
        if floor:
            break
        if fc <= fobj - (rule.gamma / (2.0 * alpha)) * ds + slack:
            break
        nxt = alpha * rule.shrink
        if nxt <= rule.c2:
            alpha = rule.c2
            floor = True
        else:
            alpha = nxt
    return alpha, cand, ds, fc


def find_step(
    problem: ProblemInstance,
    x,
    rule: LineSearchRule,
    prev: Optional[tuple] = None,
) -> float:
    """Run one backtracking ladder at ``x`` and return the accepted step.

    ``prev`` is an optional ``(previous_x, previous_gradient)`` pair used by
    the ``init="bb"`` curvature-ratio initialization.
    """
    if not isinstance(rule, LineSearchRule):
        raise ValueError("rule must be a LineSearchRule")
    rule.validate_for(problem.smooth.lipschitz)
    x = np.asarray(x, dtype=np.float64)
    fobj = objective_value(problem, x)
    if math.isinf(fobj):
        raise ValueError("x is infeasible for the regularizer")
    g = np.asarray(problem.smooth.grad_fn(x), dtype=np.float64)
    alpha, _, _, _ = _ladder(problem, x, g, fobj, rule, prev)
    return float(alpha)


def _generic_linesearch(problem, rule, x0, budget, snap_ks, early, tol):
    sm = problem.smooth
    reg = problem.regularizer
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    steps = np.empty(budget)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.size, x.size))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    prev = None
    for k in range(budget):
        g = np.asarray(sm.grad_fn(x), dtype=np.float64)
        fk = float(sm.value_fn(x))
        pk = float(reg.value_fn(x)) if reg is not None else 0.0
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fk + pk):
            return f, psi, steps, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        if early and reg is None and float(g @ g) <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        alpha, cand, ds, _ = _ladder(problem, x, g, fk + pk, rule, prev)
        if early and reg is not None and ds <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        steps[k] = alpha
        dsq[k] = ds
        prev = (x, g)
        x = cand
        _trust_check(problem, x, k)
    if status == STATUS_BUDGET:
        fb = float(sm.value_fn(x))
        pb = float(reg.value_fn(x)) if reg is not None else 0.0
        f[budget] = fb
        psi[budget] = pb
        if not np.isfinite(fb + pb):
            return f, psi, steps, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, psi, steps, dsq, snap_x, sp, m, status, x


def _generic_cd(problem, lbar, cum_p, uniforms, x0, budget, snap_ks):
    sm = problem.smooth
    reg = problem.regularizer
    n = x0.size
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    idx = np.empty(budget, dtype=np.int64)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.size, n))
    sp = 0
    for k in range(budget):
        fk = float(sm.value_fn(x))
        pk = float(reg.value_fn(x)) if reg is not None else 0.0
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fk + pk):
            return f, psi, idx, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.size and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        i = int(np.searchsorted(cum_p, uniforms[k], side="right"))
        if i >= n:
            i = n - 1
        gi = float(sm.coord_grad_fn(x, i))
        if not math.isfinite(gi):
            return f, psi, idx, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        y = x[i] - gi / lbar[i]
        if reg is not None:
            xi = float(reg.component(i).prox_fn(y, 1.0 / lbar[i]))
        else:
            xi = y
        d = xi - x[i]
        idx[k] = i
        dsq[k] = d * d
        x[i] = xi
        _trust_check(problem, x, k)
    fb = float(sm.value_fn(x))
    pb = float(reg.value_fn(x)) if reg is not None else 0.0
    f[budget] = fb
    psi[budget] = pb
    if not np.isfinite(fb + pb):
        return f, psi, idx, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
    if sp < snap_ks.size and snap_ks[sp] == budget:
        snap_x[sp] = x
        sp += 1
    return f, psi, idx, dsq, snap_x, sp, budget, STATUS_BUDGET, x


# ---------------------------------------------------------------- public API


def gd_fixed(
    problem: ProblemInstance,
    alpha: float,
    x0,
    budget: int,
    *,
    stride="pow2",
    early_stop: bool = False,
    early_tol: float = 1e-14,
    engine: str = "auto",
) -> Trace:
    """Gradient descent ``x <- x - alpha * grad f(x)`` with a fixed step.

    Requires a smooth problem (no regularizer) and ``0 < alpha <= 1/L``;
    longer fixed steps are available through :func:`gd_linesearch` with
    ``c1 == c2``.
    """
    if problem.regularizer is not None:
        raise ValueError("gd_fixed requires a smooth problem; use proxgrad_fixed")
    lip = problem.smooth.lipschitz
    if not (math.isfinite(alpha) and 0 < alpha <= (1.0 / lip) * (1 + 1e-12)):
        raise ValueError(
            f"alpha must lie in (0, 1/L] = (0, {1.0 / lip}]; "
            "use gd_linesearch with c1 == c2 for longer fixed steps"
        )
    budget = _check_budget(budget)
    x0 = _check_x0(problem, x0)
    solver_id = f"gd_fixed:alpha={alpha!r}"
    g0 = np.asarray(problem.smooth.grad_fn(x0), dtype=np.float64)
    if not np.any(g0 != 0.0):
        return _trivial_trace(problem, solver_id, x0)
    snap_ks = snapshot_grid(budget, stride)
    form = _use_kernel(problem, engine)
    if form is not None:
        a, b, _, _, _, _ = form
        f, dsq, snap_x, sp, m, status, xf = KERNELS["gd_fixed_run"](
            a, b, float(alpha), x0, budget, snap_ks, early_stop, early_tol
        )
    else:
        f, dsq, snap_x, sp, m, status, xf = _generic_gd_fixed(
            problem, float(alpha), x0, budget, snap_ks, early_stop, early_tol
        )
    steps = np.full(m, float(alpha))
    return _assemble(
        problem, solver_id, None, snap_ks, f, None, steps, None, dsq,
        snap_x, sp, m, status, xf,
    )


def gd_linesearch(
    problem: ProblemInstance,
    rule: LineSearchRule,
    x0,
    budget: int,
    *,
    stride="pow2",
    early_stop: bool = False,
    early_tol: float = 1e-14,
    engine: str = "auto",
) -> Trace:
    """Gradient descent with backtracking sufficient-decrease steps."""
    if problem.regularizer is not None:
        raise ValueError(
            "gd_linesearch requires a smooth problem; use proxgrad_linesearch"
        )
    if not isinstance(rule, LineSearchRule):
        raise ValueError("rule must be a LineSearchRule")
    rule.validate_for(problem.smooth.lipschitz)
    budget = _check_budget(budget)
    x0 = _check_x0(problem, x0)
    solver_id = (
        f"gd_linesearch:gamma={rule.gamma!r},c1={rule.c1!r},c2={rule.c2!r},"
        f"init={rule.init}"
    )
    g0 = np.asarray(problem.smooth.grad_fn(x0), dtype=np.float64)
    if not np.any(g0 != 0.0):
        return _trivial_trace(problem, solver_id, x0)
    snap_ks = snapshot_grid(budget, stride)
    form = _use_kernel(problem, engine)
    if form is not None:
        a, b, code, w, lo, hi = form
        f, psi, steps, dsq, snap_x, sp, m, status, xf = KERNELS["linesearch_run"](
            a, b, code, w, lo, hi,
            rule.gamma, rule.c1, rule.c2, rule.shrink, rule.init == "bb",
            x0, budget, snap_ks, early_stop, early_tol,
        )
    else:
        f, psi, steps, dsq, snap_x, sp, m, status, xf = _generic_linesearch(
            problem, rule, x0, budget, snap_ks, early_stop, early_tol
        )
    return _assemble(
        problem, solver_id, None, snap_ks, f, psi, steps, None, dsq,
        snap_x, sp, m, status, xf,
    )


def _resolve_lbar_vector(problem: ProblemInstance, lbar) -> Vector:
    cl = problem.smooth.coord_lipschitz
    if lbar is None:
        return cl.copy()
    lb = np.asarray(lbar, dtype=np.float64)
    if lb.ndim == 0:
        lb = np.full(problem.dim, float(lb))
    if lb.shape != (problem.dim,):
        raise ValueError(f"lbar must be a scalar or have shape ({problem.dim},)")
    if np.any(~np.isfinite(lb)) or np.any(lb < cl * (1 - 1e-12)):
        raise ValueError("lbar entries must be finite and >= the coordinate constants")
    return lb


def _resolve_dist(problem: ProblemInstance, dist) -> SamplingDistribution:
    if dist is None:
        return SamplingDistribution.uniform(problem.dim)
    if not isinstance(dist, SamplingDistribution):
        raise ValueError("dist must be a SamplingDistribution or None")
    if dist.dim != problem.dim:
        raise ValueError("dist dimension does not match the problem")
    return dist


def _draw_uniforms(seed: int, budget: int) -> Vector:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError("seed must be an integer")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return rng.random(budget)


def cd_stochastic(
    problem: ProblemInstance,
    lbar,
    dist: Optional[SamplingDistribution],
    seed: int,
    x0,
    budget: int,
    *,
    stride="pow2",
    engine: str = "auto",
) -> Trace:
    """Stochastic coordinate descent ``x_i <- x_i - grad_i f(x) / lbar_i``.

    ``lbar`` may be None (use the oracle's coordinate constants), a scalar,
    or a vector; entries must dominate the coordinate constants. ``dist``
    defaults to uniform sampling.
    """
    if problem.regularizer is not None:
        raise ValueError("cd_stochastic requires a smooth problem; use proxcd_stochastic")
    return _run_cd(problem, lbar, dist, seed, x0, budget, stride, engine, "cd_stochastic")


def proxcd_stochastic(
    problem: ProblemInstance,
    lbar,
    dist: Optional[SamplingDistribution],
    seed: int,
    x0,
    budget: int,
    *,
    stride="pow2",
    engine: str = "auto",
) -> Trace:
    """Stochastic proximal coordinate descent for separable regularizers.

    Each step solves the scalar subproblem
    ``argmin_t grad_i f(x) (t - x_i) + (lbar_i / 2)(t - x_i)^2 + psi_i(t)``
    through the scalar proximal map of the chosen coordinate.
    """
    reg = problem.regularizer
    if reg is not None and not reg.separable:
        raise ValueError("proxcd_stochastic requires a separable regularizer")
    return _run_cd(problem, lbar, dist, seed, x0, budget, stride, engine, "proxcd_stochastic")


def _run_cd(problem, lbar, dist, seed, x0, budget, stride, engine, name) -> Trace:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError("seed must be an integer")
    seed = int(seed)
    lb = _resolve_lbar_vector(problem, lbar)
    d = _resolve_dist(problem, dist)
    budget = _check_budget(budget)
    x0 = _check_x0(problem, x0)
    solver_id = f"{name}:pmin={d.p_min!r}"
    g0 = np.asarray(problem.smooth.grad_fn(x0), dtype=np.float64)
    if problem.regularizer is None and not np.any(g0 != 0.0):
        return _trivial_trace(problem, solver_id, x0, coordwise=True, seed=int(seed))
    uniforms = _draw_uniforms(seed, budget)
    snap_ks = snapshot_grid(budget, stride)
    form = _use_kernel(problem, engine)
    if form is not None:
        a, b, code, w, lo, hi = form
        f, psi, idx, dsq, snap_x, sp, m, status, xf = KERNELS["cd_run"](
            a, b, code, w, lo, hi, lb, d.cum, uniforms, x0, budget, snap_ks
        )
    else:
        f, psi, idx, dsq, snap_x, sp, m, status, xf = _generic_cd(
            problem, lb, d.cum, uniforms, x0, budget, snap_ks
        )
    return _assemble(
        problem, solver_id, int(seed), snap_ks, f, psi, None, idx, dsq,
        snap_x, sp, m, status, xf,
    )


def proxgrad_fixed(
    problem: ProblemInstance,
    lbar: float,
    x0,
    budget: int,
    *,
    stride="pow2",
    early_stop: bool = False,
    early_tol: float = 1e-14,
    engine: str = "auto",
) -> Trace:
    """Proximal gradient with the fixed step 1/lbar.

    Each step assigns ``x <- prox_psi(x - grad f(x)/lbar, 1/lbar)``; with no
    regularizer this is exactly gradient descent with step 1/lbar.
    Requires ``lbar >= L``.
    """
    lip = problem.smooth.lipschitz
    if not (math.isfinite(lbar) and lbar >= lip * (1 - 1e-12)):
        raise ValueError(f"lbar must be >= L = {lip}")
    budget = _check_budget(budget)
    x0 = _check_x0(problem, x0)
    solver_id = f"proxgrad_fixed:lbar={lbar!r}"
    snap_ks = snapshot_grid(budget, stride)
    form = _use_kernel(problem, engine)
    if form is not None:
        a, b, code, w, lo, hi = form
        f, psi, dsq, snap_x, sp, m, status, xf = KERNELS["prox_fixed_run"](
            a, b, code, w, lo, hi, float(lbar), x0, budget, snap_ks,
            early_stop, early_tol,
        )
    else:
        f, psi, dsq, snap_x, sp, m, status, xf = _generic_prox_fixed(
            problem, float(lbar), x0, budget, snap_ks, early_stop, early_tol
        )
    steps = np.full(m, 1.0 / float(lbar))
    return _assemble(
        problem, solver_id, None, snap_ks, f, psi, steps, None, dsq,
        snap_x, sp, m, status, xf,
    )


def proxgrad_linesearch(
    problem: ProblemInstance,
    rule: LineSearchRule,
    x0,
    budget: int,
    *,
    stride="pow2",
    early_stop: bool = False,
    early_tol: float = 1e-14,
    engine: str = "auto",
) -> Trace:
    """Proximal gradient with backtracking on the proximal step size.

    The candidate at step size alpha is ``prox_psi(x - alpha grad f(x),
    alpha)`` and acceptance requires
    ``F(cand) <= F(x) - (gamma / (2 alpha)) ||cand - x||^2``.
    """
    if not isinstance(rule, LineSearchRule):
        raise ValueError("rule must be a LineSearchRule")
    rule.validate_for(problem.smooth.lipschitz)
    budget = _check_budget(budget)
    x0 = _check_x0(problem, x0)
    solver_id = (
        f"proxgrad_linesearch:gamma={rule.gamma!r},c1={rule.c1!r},c2={rule.c2!r},"
        f"init={rule.init}"
    )
    snap_ks = snapshot_grid(budget, stride)
    form = _use_kernel(problem, engine)
    if form is not None:
        a, b, code, w, lo, hi = form
        f, psi, steps, dsq, snap_x, sp, m, status, xf = KERNELS["linesearch_run"](
            a, b, code, w, lo, hi,
            rule.gamma, rule.c1, rule.c2, rule.shrink, rule.init == "bb",
            x0, budget, snap_ks, early_stop, early_tol,
        )
    else:
        f, psi, steps, dsq, snap_x, sp, m, status, xf = _generic_linesearch(
            problem, rule, x0, budget, snap_ks, early_stop, early_tol
        )
    return _assemble(
        problem, solver_id, None, snap_ks, f, psi, steps, None, dsq,
        snap_x, sp, m, status, xf,
    )
