"""CSV serialization for traces and snapshots.

Trace files carry one row per recorded iterate with the columns

    k,f,psi,F,delta,k_delta,step_or_index,d_norm_sq

``delta`` and ``k_delta`` are filled only when a reference optimal value is
supplied at write time; ``step_or_index`` and ``d_norm_sq`` describe the
action taken at row k and are empty on the final row. Snapshot files carry
``k,x0,...,x{n-1}`` rows for the recorded iterates.

Floats are written with :func:`numpy.format_float_scientific` in unique
(shortest round-tripping) form, so parsing a file back yields bitwise the
original values.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .problems import Vector
from .solvers import Trace

TRACE_HEADER = "k,f,psi,F,delta,k_delta,step_or_index,d_norm_sq"


def _fmt(v: float) -> str:
    return np.format_float_scientific(v, unique=True)


def emit_trace(trace: Trace, path: Union[str, Path], fstar: Optional[float] = None) -> None:
    """Write a trace; ``fstar`` enables the gap columns.

    Gaps are written as raw differences ``F - fstar`` without clamping;
    consumers decide how to treat rounding-level negatives.
    """
    path = Path(path)
    F = trace.objective
    m = trace.dsq.size
    is_coord = trace.coord is not None
    lines = [TRACE_HEADER]
    for k in range(trace.k.size):
        row = [str(int(trace.k[k])), _fmt(trace.f[k]), _fmt(trace.psi[k]), _fmt(F[k])]
        if fstar is not None:
            delta = F[k] - fstar
            row.append(_fmt(delta))
            row.append(_fmt(trace.k[k] * delta))
        else:
            row.extend(["", ""])
        if k < m:
            if is_coord:
                row.append(str(int(trace.coord[k])))
            else:
                row.append(_fmt(trace.step[k]))
            row.append(_fmt(trace.dsq[k]))
        else:
            row.extend(["", ""])
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def emit_snapshots(trace: Trace, path: Union[str, Path]) -> None:
    """Write the snapshot iterates as ``k,x0,...,x{n-1}`` rows."""
    path = Path(path)
    n = trace.snap_x.shape[1]
    header = "k," + ",".join(f"x{i}" for i in range(n))
    lines = [header]
    for j in range(trace.snap_k.size):
        row = [str(int(trace.snap_k[j]))]
        row.extend(_fmt(v) for v in trace.snap_x[j])
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ParsedTrace:
    """Column view of a trace file; empty cells parse to NaN.

    Exposes ``objective``, ``step``, ``coord``, and ``dsq`` in the shapes
    the diagnostics expect, so replay checks run directly on parsed files.
    """

    k: Vector
    f: Vector
    psi: Vector
    F: Vector
    delta: Optional[Vector]
    k_delta: Optional[Vector]
    step_or_index: Vector
    d_norm_sq: Vector

    @property
    def objective(self) -> Vector:
        return self.F

    @property
    def step(self) -> Vector:
        """Recorded actions as step sizes (all rows but the last)."""
        return self.step_or_index[:-1]

    @property
    def coord(self) -> Vector:
        """Recorded actions as coordinate indices (all rows but the last)."""
        return self.step_or_index[:-1].astype(np.int64)

    @property
    def dsq(self) -> Vector:
        return self.d_norm_sq[:-1]


def parse_trace(path: Union[str, Path]) -> ParsedTrace:
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError(f"{path} is not a trace file (bad header)")
    rows = [line.split(",") for line in lines[1:]]
    if not rows:
        raise ValueError(f"{path} contains no data rows")
    if any(len(r) != 8 for r in rows):
        raise ValueError(f"{path} has rows with the wrong number of columns")

    def col(i: int) -> Vector:
        return np.array([float(r[i]) if r[i] != "" else np.nan for r in rows])

    k = col(0)
    if np.any(np.isnan(k)):
        raise ValueError(f"{path} has empty k cells")
    delta = col(4)
    k_delta = col(5)
    has_gaps = not np.all(np.isnan(delta))
    return ParsedTrace(
        k=k.astype(np.int64),
        f=col(1),
        psi=col(2),
        F=col(3),
        delta=delta if has_gaps else None,
        k_delta=k_delta if has_gaps else None,
        step_or_index=col(6),
        d_norm_sq=col(7),
    )


def parse_snapshots(path: Union[str, Path]):
    """Read a snapshot file; returns ``(k, X)`` with one row of X per k."""
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    if not lines or not lines[0].startswith("k,x0"):
        raise ValueError(f"{path} is not a snapshot file (bad header)")
    width = len(lines[0].split(","))
    ks = []
    xs = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != width:
            raise ValueError(f"{path} has rows with the wrong number of columns")
        ks.append(int(cells[0]))
        xs.append([float(c) for c in cells[1:]])
    return np.array(ks, dtype=np.int64), np.array(xs, dtype=np.float64)
