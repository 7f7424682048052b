"""Problem oracles for first-order convex optimization.

A problem is ``F(x) = f(x) + psi(x)`` where ``f`` is convex with an
L-Lipschitz gradient, exposed through a :class:`SmoothOracle`, and ``psi`` is
an optional convex, possibly nonsmooth :class:`Regularizer` with a cheap
proximal map. Constructors for the standard test gallery live here:

* :func:`make_quadratic` - ``f(x) = 0.5 (x - b)^T A (x - b)`` for a PSD matrix
  built from a spectrum, an optional null space, and an optional random
  rotation
* :func:`make_power`     - the scalar monomial ``f(x) = x**p`` restricted to
  ``[-1, 1]``
* :func:`make_l1`        - ``psi(x) = w * sum(|x_i|)``
* :func:`make_box`       - the indicator of ``[lo, hi]``

Oracles are immutable after construction. Infinite regularizer values (points
outside a constraint set) are reported as ``math.inf``; consumers must branch
on ``math.isinf`` before doing arithmetic, which :func:`objective_value` does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

INFINITE = math.inf


@dataclass(frozen=True)
class QuadraticStructure:
    """Dense data backing a quadratic smooth term, consumed by the kernels."""

    matrix: Vector
    offset: Vector


@dataclass(frozen=True)
class SmoothOracle:
    """Callable bundle for a smooth convex function.

    ``lipschitz`` bounds the gradient's Lipschitz constant and
    ``coord_lipschitz[i]`` bounds the coordinate-wise constant, so
    ``0 < coord_lipschitz[i] <= lipschitz`` must hold for every i.
    ``trust_radius`` marks instances whose constants are only valid on
    ``max|x_i| <= trust_radius``; solvers check iterates against it.
    """

    value_fn: Callable[[Vector], float]
    grad_fn: Callable[[Vector], Vector]
    coord_grad_fn: Callable[[Vector, int], float]
    lipschitz: float
    coord_lipschitz: Vector
    quadratic: Optional[QuadraticStructure] = None
    trust_radius: Optional[float] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lipschitz) and self.lipschitz > 0):
            raise ValueError("lipschitz must be a positive finite float")
        cl = np.asarray(self.coord_lipschitz, dtype=np.float64)
        if cl.ndim != 1 or cl.size == 0:
            raise ValueError("coord_lipschitz must be a nonempty 1-d array")
        if not np.all(np.isfinite(cl)):
            raise ValueError("coord_lipschitz entries must be finite")
        if np.any(cl <= 0) or np.any(cl > self.lipschitz * (1 + 1e-12)):
            raise ValueError("coord_lipschitz entries must lie in (0, lipschitz]")
        object.__setattr__(self, "coord_lipschitz", cl)

    @property
    def dim(self) -> int:
        return int(self.coord_lipschitz.size)


@dataclass(frozen=True)
class ScalarRegularizer:
    """One separable component psi_i, with its scalar proximal map.

    ``prox_fn(y, lam)`` returns ``argmin_t  (t - y)**2 / (2 lam) + psi_i(t)``.
    """

    value_fn: Callable[[float], float]
    prox_fn: Callable[[float, float], float]


@dataclass(frozen=True)
class Regularizer:
    """Convex regularizer with a proximal map.

    ``prox_fn(y, lam)`` solves ``argmin_x  ||x - y||^2 / (2 lam) + psi(x)``.
    ``components`` is set when psi is separable: either one entry per
    coordinate or a single entry shared by all coordinates.  ``kernel_form``
    is the structural tag consumed by the compiled solver kernels, one of
    ``("l1", w)`` or ``("box", lo, hi)``; it is None for custom regularizers,
    which then run through the generic solver path.
    """

    value_fn: Callable[[Vector], float]
    prox_fn: Callable[[Vector, float], Vector]
    components: Optional[tuple[ScalarRegularizer, ...]] = None
    kernel_form: Optional[tuple] = None

    def component(self, i: int) -> ScalarRegularizer:
        if self.components is None:
            raise ValueError("regularizer is not separable")
        if len(self.components) == 1:
            return self.components[0]
        return self.components[i]

    @property
    def separable(self) -> bool:
        return self.components is not None


@dataclass(frozen=True)
class ProblemInstance:
    """A smooth term, an optional regularizer, and optional ground truth.

    ``known_opt_value`` is the exact optimal objective when available.
    ``solution_projector`` maps a point to the nearest optimal point; when
    present it must be idempotent and the objective at a projected point must
    equal ``known_opt_value``.
    """

    smooth: SmoothOracle
    regularizer: Optional[Regularizer] = None
    known_opt_value: Optional[float] = None
    solution_projector: Optional[Callable[[Vector], Vector]] = None
    problem_id: str = "custom"

    @property
    def dim(self) -> int:
        return self.smooth.dim


def prox(reg: Optional[Regularizer], y: Vector, lam: float) -> Vector:
    """Evaluate the proximal map of ``reg`` at ``y`` with step ``lam``.

    ``reg=None`` means psi = 0, whose proximal map is the identity.
    """
    y = np.asarray(y, dtype=np.float64)
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError("prox step lam must be a positive finite float")
    if not np.all(np.isfinite(y)):
        raise ValueError("prox input must be finite")
    if reg is None:
        return y.copy()
    out = np.asarray(reg.prox_fn(y, lam), dtype=np.float64)
    if out.shape != y.shape:
        raise ValueError("prox_fn changed the shape of its input")
    return out


def objective_value(problem: ProblemInstance, x: Vector) -> float:
    """F(x) = f(x) + psi(x), returning inf without arithmetic on inf."""
    if problem.regularizer is not None:
        p = float(problem.regularizer.value_fn(x))
        if math.isinf(p):
            return INFINITE
    else:
        p = 0.0
    return float(problem.smooth.value_fn(x)) + p


def _haar_orthogonal(n: int, rng: np.random.Generator) -> Vector:
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    signs = np.where(np.diag(r) >= 0, 1.0, -1.0)
    return q * signs


def make_quadratic(
    spectrum,
    offset=None,
    *,
    null_dim: int = 0,
    rotation_seed: Optional[int] = None,
    problem_id: Optional[str] = None,
) -> ProblemInstance:
    """Quadratic ``f(x) = 0.5 (x - b)^T A (x - b)`` from its spectrum.

    ``A`` has eigenvalues ``spectrum`` plus ``null_dim`` extra zeros. With
    ``rotation_seed=None`` the matrix is diagonal in that eigenbasis order;
    otherwise the eigenbasis is a seeded Haar-random rotation. ``L`` is the
    largest eigenvalue and the coordinate constants are the diagonal of A.
    Coordinates whose diagonal entry is zero (possible only without rotation)
    get the valid upper bound ``L`` instead, since every positive constant
    bounds a gradient component that never varies.

    The solution set is the affine space ``b + null(A)``; the returned
    projector maps onto it and ``known_opt_value`` is 0.
    """
    spec = np.atleast_1d(np.asarray(spectrum, dtype=np.float64))
    if spec.ndim != 1 or spec.size == 0:
        raise ValueError("spectrum must be a nonempty 1-d array")
    if np.any(spec < 0) or not np.all(np.isfinite(spec)):
        raise ValueError("spectrum entries must be finite and nonnegative")
    if null_dim < 0:
        raise ValueError("null_dim must be nonnegative")
    eigs = np.concatenate([spec, np.zeros(null_dim)])
    if not np.any(eigs > 0):
        raise ValueError("spectrum must contain at least one positive eigenvalue")
    n = eigs.size
    if offset is None:
        b = np.zeros(n)
    else:
        b = np.asarray(offset, dtype=np.float64).copy()
        if b.shape != (n,):
            raise ValueError(f"offset must have shape ({n},)")
        if not np.all(np.isfinite(b)):
            raise ValueError("offset must be finite")

    if rotation_seed is None:
        basis = np.eye(n)
    else:
        basis = _haar_orthogonal(n, np.random.Generator(np.random.PCG64(rotation_seed)))
    a = (basis * eigs) @ basis.T
    a = np.ascontiguousarray((a + a.T) / 2.0)

    lip = float(np.max(eigs))
    diag = np.diag(a).copy()
    coord = np.where(diag <= 0, lip, np.minimum(diag, lip))

    null_basis = np.ascontiguousarray(basis[:, eigs == 0])

    def value_fn(x: Vector) -> float:
        r = x - b
        return 0.5 * float(r @ (a @ r))

    def grad_fn(x: Vector) -> Vector:
        return a @ (x - b)

    def coord_grad_fn(x: Vector, i: int) -> float:
        return float(a[i] @ (x - b))

    def projector(x: Vector) -> Vector:
        if null_basis.shape[1] == 0:
            return b.copy()
        return b + null_basis @ (null_basis.T @ (x - b))

    smooth = SmoothOracle(
        value_fn=value_fn,
        grad_fn=grad_fn,
        coord_grad_fn=coord_grad_fn,
        lipschitz=lip,
        coord_lipschitz=coord,
        quadratic=QuadraticStructure(matrix=a, offset=b),
    )
    return ProblemInstance(
        smooth=smooth,
        known_opt_value=0.0,
        solution_projector=projector,
        problem_id=problem_id or f"quadratic:dim={n}",
    )


def make_power(p: int) -> ProblemInstance:
    """Scalar monomial ``f(x) = x**p`` for an even integer ``p >= 4``.

    The gradient constant ``L = p (p - 1)`` is valid only on ``[-1, 1]``, so
    the oracle carries ``trust_radius=1`` and solvers must keep iterates
    inside it.
    """
    if not isinstance(p, (int, np.integer)):
        raise ValueError("p must be an integer")
    p = int(p)
    if p < 4 or p % 2 != 0:
        raise ValueError("p must be an even integer >= 4")
    lip = float(p * (p - 1))

    def value_fn(x: Vector) -> float:
        return float(x[0] ** p)

    def grad_fn(x: Vector) -> Vector:
        return np.array([p * x[0] ** (p - 1)])

    def coord_grad_fn(x: Vector, i: int) -> float:
        return float(p * x[0] ** (p - 1))

    smooth = SmoothOracle(
        value_fn=value_fn,
        grad_fn=grad_fn,
        coord_grad_fn=coord_grad_fn,
        lipschitz=lip,
        coord_lipschitz=np.array([lip]),
        trust_radius=1.0,
    )
    return ProblemInstance(
        smooth=smooth,
        known_opt_value=0.0,
        solution_projector=lambda x: np.zeros(1),
        problem_id=f"power:p={p}",
    )


def _soft_threshold_scalar(y: float, cut: float) -> float:
    if y > cut:
        return y - cut
    if y < -cut:
        return y + cut
    return 0.0


def make_l1(weight: float) -> Regularizer:
    """psi(x) = weight * sum(|x_i|), prox = soft thresholding."""
    if not (math.isfinite(weight) and weight > 0):
        raise ValueError("weight must be a positive finite float")
    w = float(weight)

    def value_fn(x: Vector) -> float:
        # dot against ones instead of np.sum so the reduction order matches
        # the compiled kernels bit for bit
        return w * float(np.dot(np.abs(x), np.ones(x.shape[0])))

    def prox_fn(y: Vector, lam: float) -> Vector:
        return np.sign(y) * np.maximum(np.abs(y) - w * lam, 0.0)

    comp = ScalarRegularizer(
        value_fn=lambda t: w * abs(t),
        prox_fn=lambda y, lam: _soft_threshold_scalar(y, w * lam),
    )
    return Regularizer(
        value_fn=value_fn,
        prox_fn=prox_fn,
        components=(comp,),
        kernel_form=("l1", w),
    )


def make_box(lower, upper) -> Regularizer:
    """Indicator of the box ``[lower, upper]``; prox is the componentwise clamp.

    Scalar bounds apply to every coordinate. The indicator reports points
    outside the box as ``math.inf``.
    """
    lo = np.atleast_1d(np.asarray(lower, dtype=np.float64)).copy()
    hi = np.atleast_1d(np.asarray(upper, dtype=np.float64)).copy()
    if lo.shape != hi.shape:
        raise ValueError("lower and upper must have the same shape")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("box bounds must be finite")
    if np.any(lo > hi):
        raise ValueError("lower must be <= upper componentwise")

    def value_fn(x: Vector) -> float:
        if np.all(x >= lo) and np.all(x <= hi):
            return 0.0
        return INFINITE

    def prox_fn(y: Vector, lam: float) -> Vector:
        return np.minimum(np.maximum(y, lo), hi)

    def _comp(l: float, h: float) -> ScalarRegularizer:
        return ScalarRegularizer(
            value_fn=lambda t: 0.0 if l <= t <= h else INFINITE,
            prox_fn=lambda y, lam: min(max(y, l), h),
        )

    components = tuple(_comp(float(l), float(h)) for l, h in zip(lo, hi))
    return Regularizer(
        value_fn=value_fn,
        prox_fn=prox_fn,
        components=components,
        kernel_form=("box", lo, hi),
    )
