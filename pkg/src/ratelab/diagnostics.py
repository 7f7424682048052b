"""Trace diagnostics: gap decay certificates, rate fits, invariant checks.

The central object is the optimality gap sequence Delta_k = F(x_k) - F*.
For the methods in this package the certified behavior is that k * Delta_k
tends to zero, which is strictly stronger than the O(1/k) envelope and
strictly weaker than any fixed faster rate. :func:`check_gap_decay` tests
the three ingredients on a finite trace: the gaps decrease monotonically,
their partial sums flatten (a finite-data summability proxy), and the
scaled gaps k * Delta_k die out in the final decade.

The remaining checks replay per-step guarantees recorded in a trace
(sufficient decrease, coordinate-wise decrease, distance recursions,
proximal stationarity) so a run can be audited after the fact without
re-executing the solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .problems import ProblemInstance, Vector, prox
from .solvers import Trace


@dataclass(frozen=True)
class GapSequence:
    """Optimality gaps Delta_k >= 0 indexed by iteration count."""

    k: Vector
    delta: Vector

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=np.int64)
        d = np.asarray(self.delta, dtype=np.float64)
        if k.ndim != 1 or d.shape != k.shape or k.size == 0:
            raise ValueError("k and delta must be matching nonempty 1-d arrays")
        if np.any(np.diff(k) <= 0) or k[0] < 0:
            raise ValueError("k must be strictly increasing and nonnegative")
        if not np.all(np.isfinite(d)):
            raise ValueError("delta must be finite")
        if np.any(d < 0):
            raise ValueError("delta must be nonnegative")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "delta", d)

    @classmethod
    def from_trace(cls, trace: Trace, fstar: float, strict: bool = True) -> "GapSequence":
        """Gaps of a recorded run against a reference optimal value.

        Values below ``fstar`` by more than a relative rounding allowance
        mean the reference is wrong and raise; tiny negatives are clamped
        to zero.
        """
        return cls.from_values(trace.objective, fstar, k=trace.k, strict=strict)

    @classmethod
    def from_values(cls, values, fstar: float, k=None, strict: bool = True) -> "GapSequence":
        """``strict=False`` clamps arbitrarily negative gaps to zero instead
        of raising; use it when ``fstar`` is a self-computed upper estimate
        rather than a trusted optimum."""
        v = np.asarray(values, dtype=np.float64)
        if not math.isfinite(fstar):
            raise ValueError("fstar must be finite")
        d = v - fstar
        tol = 1e-10 * max(1.0, abs(fstar))
        low = float(np.min(d)) if d.size else 0.0
        if strict and low < -tol:
            raise ValueError(
                f"objective drops {-low:.3e} below the reference optimum; "
                "the reference value is not optimal"
            )
        d = np.maximum(d, 0.0)
        if k is None:
            k = np.arange(d.size, dtype=np.int64)
        return cls(k=np.asarray(k, dtype=np.int64), delta=d)

    @property
    def scaled(self) -> Vector:
        """k * Delta_k."""
        return self.k.astype(np.float64) * self.delta


@dataclass(frozen=True)
class GapDecayReport:
    """Finite-trace certificate for vanishing scaled gaps.

    ``monotone``: gaps never increase (up to rounding slack).
    ``summable``: the final decade adds at most ``growth_frac`` of the total
    partial sum.
    ``scaled_gap_vanishes``: the largest k * Delta_k in the final decade is
    at most ``tail_factor`` times the largest overall.
    """

    monotone: bool
    summable: bool
    scaled_gap_vanishes: bool
    max_increase: float
    sum_ratio: float
    tail_ratio: float

    @property
    def certified(self) -> bool:
        return self.monotone and self.summable and self.scaled_gap_vanishes


def check_gap_decay(
    gaps,
    growth_frac: float = 0.05,
    tail_factor: float = 0.05,
) -> GapDecayReport:
    """Classify a gap sequence; see :class:`GapDecayReport` for the tests.

    The final decade is the index range ``[N // 10, N]``. Sequences shorter
    than 100 entries cannot separate the decades meaningfully and raise.
    """
    if not isinstance(gaps, GapSequence):
        gaps = GapSequence(np.arange(len(gaps), dtype=np.int64), gaps)
    d = gaps.delta
    n = d.size
    if n < 100:
        raise ValueError("need at least 100 gap values to classify decay")

    slack = 1e-12 * max(1.0, float(np.max(d)))
    inc = np.diff(d)
    max_increase = float(np.max(inc)) if inc.size else 0.0
    monotone = max_increase <= slack

    total = float(np.sum(d))
    cut = n // 10
    head = float(np.sum(d[:cut]))
    if total <= 0.0:
        sum_ratio = 0.0
    else:
        sum_ratio = (total - head) / total
    summable = sum_ratio <= growth_frac

    s = gaps.scaled
    peak = float(np.max(s))
    tail_peak = float(np.max(s[cut:]))
    tail_ratio = 0.0 if peak <= 0.0 else tail_peak / peak
    vanishes = tail_ratio <= tail_factor

    return GapDecayReport(
        monotone=monotone,
        summable=summable,
        scaled_gap_vanishes=vanishes,
        max_increase=max_increase,
        sum_ratio=sum_ratio,
        tail_ratio=tail_ratio,
    )


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit Delta_k ~ constant * k**(-exponent) on a window."""

    exponent: float
    constant: float
    k_lo: int
    k_hi: int
    n_samples: int


def fit_power_law(
    gaps,
    window: Tuple[int, int],
    samples: int = 200,
) -> PowerLawFit:
    """Fit a decay exponent on log-spaced sample points inside ``window``.

    ``window = (k_lo, k_hi)`` must span at least a factor of 10. Zero gaps
    inside the window are dropped with a warning (the sequence has hit
    floating point zero); fewer than 10 usable samples raise.
    """
    if not isinstance(gaps, GapSequence):
        gaps = GapSequence(np.arange(len(gaps), dtype=np.int64), gaps)
    k_lo, k_hi = int(window[0]), int(window[1])
    if k_lo < 1:
        raise ValueError("window must start at k >= 1")
    if k_hi < 10 * k_lo:
        raise ValueError("window must span at least one decade (k_hi >= 10 k_lo)")
    if k_hi > int(gaps.k[-1]):
        raise ValueError(f"window end {k_hi} exceeds the recorded range {int(gaps.k[-1])}")

    grid = np.unique(np.round(np.geomspace(k_lo, k_hi, samples)).astype(np.int64))
    mask = np.isin(gaps.k, grid)
    ks = gaps.k[mask].astype(np.float64)
    ds = gaps.delta[mask]

    nz = ds > 0.0
    if not np.all(nz):
        warnings.warn(
            "window contains zero gaps; fitting on the nonzero entries only",
            RuntimeWarning,
            stacklevel=2,
        )
        ks, ds = ks[nz], ds[nz]
    if ks.size < 10:
        raise ValueError("fewer than 10 usable sample points in the fit window")

    lx = np.log(ks)
    ly = np.log(ds)
    slope, intercept = np.polyfit(lx, ly, 1)
    return PowerLawFit(
        exponent=float(-slope),
        constant=float(np.exp(intercept)),
        k_lo=k_lo,
        k_hi=k_hi,
        n_samples=int(ks.size),
    )


@dataclass(frozen=True)
class RateReport:
    """Summary verdict for one trace against a reference optimum."""

    gap_first: float
    gap_final: float
    tail_ratio: float
    monotone: bool
    fit: Optional[PowerLawFit]

    @property
    def gap_reduction(self) -> float:
        if self.gap_first <= 0.0:
            return 0.0
        return self.gap_final / self.gap_first


def rate_report(
    gaps: GapSequence,
    fit_window: Optional[Tuple[int, int]] = None,
    samples: int = 200,
) -> RateReport:
    """Condense a gap sequence into the headline numbers.

    ``tail_ratio`` here is the scaled gap at the final iterate divided by
    the largest scaled gap anywhere in the run: small values certify that
    k * Delta_k has collapsed relative to its transient peak.
    """
    s = gaps.scaled
    peak = float(np.max(s))
    tail_ratio = 0.0 if peak <= 0.0 else float(s[-1]) / peak
    inc = np.diff(gaps.delta)
    slack = 1e-12 * max(1.0, float(np.max(gaps.delta)))
    fit = fit_power_law(gaps, fit_window, samples) if fit_window is not None else None
    return RateReport(
        gap_first=float(gaps.delta[0]),
        gap_final=float(gaps.delta[-1]),
        tail_ratio=tail_ratio,
        monotone=bool(inc.size == 0 or np.max(inc) <= slack),
        fit=fit,
    )


# ------------------------------------------------------------- step replays


@dataclass(frozen=True)
class ReplayReport:
    """Outcome of re-checking a per-step condition across a whole trace."""

    n_checked: int
    n_passed: int
    worst_excess: float

    @property
    def all_passed(self) -> bool:
        return self.n_checked == self.n_passed

    @property
    def pass_fraction(self) -> float:
        return 1.0 if self.n_checked == 0 else self.n_passed / self.n_checked


def replay_step_conditions(trace: Trace, gamma: float) -> ReplayReport:
    """Re-check the accepted sufficient-decrease inequality at every step.

    Uses only recorded quantities: requires
    ``F_{k+1} <= F_k - (gamma / (2 alpha_k)) dsq_k + slack`` with the same
    relative slack the solvers grant at acceptance time. Fixed-step
    proximal traces record ``alpha_k = 1/lbar``, so ``gamma=1`` replays
    their guaranteed decrease.
    """
    if trace.step is None:
        raise ValueError("trace has no recorded step sizes")
    F = trace.objective
    n_checked = trace.dsq.size
    n_passed = 0
    worst = 0.0
    for k in range(n_checked):
        alpha = trace.step[k]
        slack = 1e-12 * max(1.0, abs(F[k]))
        rhs = F[k] - (gamma / (2.0 * alpha)) * trace.dsq[k] + slack
        excess = F[k + 1] - rhs
        if excess <= 0.0:
            n_passed += 1
        elif excess > worst:
            worst = excess
    return ReplayReport(n_checked=n_checked, n_passed=n_passed, worst_excess=worst)


def check_descent_margin(trace: Trace, lipschitz: float) -> ReplayReport:
    """Re-check the fixed-step descent amount against its guaranteed margin.

    For gradient descent with constant step alpha the per-step decrease is
    at least ``M(alpha) ||g_k||^2`` with ``M(alpha) = alpha (1 - L alpha / 2)``;
    the squared gradient norm is recovered from the recorded squared step
    as ``dsq_k / alpha^2``.
    """
    if trace.step is None:
        raise ValueError("trace has no recorded step sizes")
    F = trace.objective
    n_checked = trace.dsq.size
    n_passed = 0
    worst = 0.0
    for k in range(n_checked):
        alpha = trace.step[k]
        margin = alpha * (1.0 - lipschitz * alpha / 2.0)
        gsq = trace.dsq[k] / (alpha * alpha)
        slack = 1e-12 * max(1.0, abs(F[k]))
        excess = (F[k] - F[k + 1]) - margin * gsq
        if excess >= -slack:
            n_passed += 1
        else:
            worst = max(worst, -excess)
    return ReplayReport(n_checked=n_checked, n_passed=n_passed, worst_excess=worst)


def check_cd_step_decrease(trace: Trace, lbar) -> ReplayReport:
    """Re-check the coordinate-step decrease ``F_{k+1} <= F_k - (lbar_i/2) dsq_k``."""
    if trace.coord is None:
        raise ValueError("trace has no recorded coordinate indices")
    lb = np.asarray(lbar, dtype=np.float64)
    F = trace.objective
    n_checked = trace.dsq.size
    n_passed = 0
    worst = 0.0
    for k in range(n_checked):
        i = trace.coord[k]
        slack = 1e-12 * max(1.0, abs(F[k]))
        excess = F[k + 1] - (F[k] - 0.5 * lb[i] * trace.dsq[k] + slack)
        if excess <= 0.0:
            n_passed += 1
        else:
            worst = max(worst, excess)
    return ReplayReport(n_checked=n_checked, n_passed=n_passed, worst_excess=worst)


# ----------------------------------------------------------- iterate bounds


@dataclass(frozen=True)
class BoundReport:
    """Result of testing a uniform bound across trace snapshots."""

    ok: bool
    bound: float
    max_value: float
    max_excess: float
    n_checked: int


def check_iterate_bound(
    trace: Trace,
    xbar,
    fstar: float,
    budget_coeff: float,
    slack: float = 1e-9,
) -> BoundReport:
    """Check ``||x_k - xbar||^2 <= ||x_0 - xbar||^2 + budget_coeff (F_0 - F*)``
    at every snapshot.

    ``budget_coeff`` carries the method-specific factor: ``2 c1 / gamma``
    for the line-search distance estimate, ``2 L c1^2 / gamma`` for the
    step-energy variant. The bound is padded by ``slack`` (absolute).
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    F = trace.objective
    d0 = trace.snap_x[0] - xbar
    gap0 = float(F[0]) - fstar
    bound = float(d0 @ d0) + budget_coeff * gap0 + slack
    vals = np.einsum("ij,ij->i", trace.snap_x - xbar, trace.snap_x - xbar)
    max_value = float(np.max(vals))
    return BoundReport(
        ok=max_value <= bound,
        bound=bound,
        max_value=max_value,
        max_excess=max(0.0, max_value - bound),
        n_checked=int(vals.size),
    )


def weighted_squared_distance(x, xbar, lbar, probs) -> float:
    """``sum_i (lbar_i / probs_i) (x_i - xbar_i)^2``, the sampling-weighted
    squared distance contracted by proximal coordinate steps."""
    x = np.asarray(x, dtype=np.float64)
    xbar = np.asarray(xbar, dtype=np.float64)
    lb = np.asarray(lbar, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    d = x - xbar
    return float(np.sum((lb / p) * d * d))


def check_distance_recursion(
    trace: Trace,
    xbar,
    alpha: float,
    fstar: float,
    slack: float = 1e-9,
) -> ReplayReport:
    """Check the one-step distance recursion on consecutive snapshots.

    For fixed-step descent:
    ``||x_{k+1} - xbar||^2 <= ||x_k - xbar||^2
    + 2 alpha (f_k - f_{k+1}) - 2 alpha (f_k - f*)``.
    Requires a trace recorded with ``stride="all"`` (or any stride placing
    consecutive iterates next to each other); pairs with gaps are skipped.
    """
    xbar = np.asarray(xbar, dtype=np.float64)
    F = trace.objective
    ks = trace.snap_k
    n_checked = 0
    n_passed = 0
    worst = 0.0
    for j in range(ks.size - 1):
        k0, k1 = int(ks[j]), int(ks[j + 1])
        if k1 != k0 + 1:
            continue
        n_checked += 1
        da = trace.snap_x[j] - xbar
        db = trace.snap_x[j + 1] - xbar
        lhs = float(db @ db)
        rhs = (
            float(da @ da)
            + 2.0 * alpha * (F[k0] - F[k1])
            - 2.0 * alpha * (F[k0] - fstar)
            + slack * max(1.0, float(da @ da))
        )
        if lhs <= rhs:
            n_passed += 1
        else:
            worst = max(worst, lhs - rhs)
    if n_checked == 0:
        raise ValueError("no consecutive snapshot pairs; record with stride='all'")
    return ReplayReport(n_checked=n_checked, n_passed=n_passed, worst_excess=worst)


# -------------------------------------------------------- solution distance


@dataclass(frozen=True)
class DistanceReport:
    """Distances from snapshots to the solution set."""

    k: Vector
    dist: Vector
    final_ratio: float
    tail_ratio: float
    tail_ok: bool


def distance_to_solution(
    trace: Trace,
    projector: Callable[[Vector], Vector],
    tail_factor: float = 0.5,
) -> DistanceReport:
    """Measure ``||x_k - P(x_k)||`` at every snapshot.

    ``final_ratio`` compares the last snapshot to the start; ``tail_ratio``
    is the largest distance in the trailing ``1 - tail_factor`` portion of
    the run relative to the start, and ``tail_ok`` asserts the iterates
    never drift beyond their initial distance there.
    """
    ks = trace.snap_k
    dists = np.empty(ks.size)
    for j in range(ks.size):
        x = trace.snap_x[j]
        r = x - np.asarray(projector(x), dtype=np.float64)
        dists[j] = math.sqrt(float(r @ r))
    base = float(dists[0])
    if base <= 0.0:
        peak_tail = float(np.max(dists))
        return DistanceReport(
            k=ks, dist=dists,
            final_ratio=0.0 if peak_tail <= 0 else math.inf,
            tail_ratio=0.0 if peak_tail <= 0 else math.inf,
            tail_ok=peak_tail <= 1e-12,
        )
    tail = ks >= tail_factor * float(ks[-1])
    tail_ratio = float(np.max(dists[tail])) / base
    return DistanceReport(
        k=ks,
        dist=dists,
        final_ratio=float(dists[-1]) / base,
        tail_ratio=tail_ratio,
        tail_ok=tail_ratio <= 1.0 + 1e-9,
    )


# ------------------------------------------------------- prox stationarity


@dataclass(frozen=True)
class StationarityReport:
    """Approximate first-order optimality certificate at a point."""

    ok: bool
    step_norm: float
    max_violation: float


def check_prox_stationarity(
    problem: ProblemInstance,
    x,
    lbar: float,
    tol: float = 1e-8,
) -> StationarityReport:
    """Certify that ``x`` is within ``tol`` of a fixed point of the proximal
    gradient map and that the implied subgradient lies in the right set.

    With ``d = prox(x - g/lbar, 1/lbar) - x`` the vector ``v = -(g + lbar d)``
    belongs to the subdifferential of the regularizer at ``x + d``; the
    check enforces the membership conditions coordinate-wise (l1: ``|v_i|``
    within the weight at zeros, equal to the signed weight elsewhere; box:
    sign conditions active only at the bounds; none: ``v = -g`` must vanish).
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(problem.smooth.grad_fn(x), dtype=np.float64)
    xp = prox(problem.regularizer, x - g / lbar, 1.0 / lbar)
    d = xp - x
    step_norm = math.sqrt(float(d @ d))
    v = -(g + lbar * d)

    reg = problem.regularizer
    worst = 0.0
    if reg is None:
        worst = float(np.max(np.abs(v))) if v.size else 0.0
    elif reg.kernel_form is not None and reg.kernel_form[0] == "l1":
        w = float(reg.kernel_form[1])
        for i in range(x.size):
            t = xp[i]
            if abs(t) <= tol:
                worst = max(worst, abs(v[i]) - w)
            else:
                worst = max(worst, abs(v[i] - w * math.copysign(1.0, t)))
    elif reg.kernel_form is not None and reg.kernel_form[0] == "box":
        lo = np.asarray(reg.kernel_form[1], dtype=np.float64)
        hi = np.asarray(reg.kernel_form[2], dtype=np.float64)
        if lo.size == 1:
            lo = np.full(x.size, lo[0])
            hi = np.full(x.size, hi[0])
        for i in range(x.size):
            t = xp[i]
            at_lo = abs(t - lo[i]) <= tol
            at_hi = abs(t - hi[i]) <= tol
            if at_lo and not at_hi:
                worst = max(worst, v[i])
            elif at_hi and not at_lo:
                worst = max(worst, -v[i])
            elif not at_lo and not at_hi:
                worst = max(worst, abs(v[i]))
    else:
        raise ValueError("stationarity conditions unknown for this regularizer")

    worst = max(worst, 0.0)
    return StationarityReport(
        ok=step_norm <= tol and worst <= tol,
        step_norm=step_norm,
        max_violation=worst,
    )
