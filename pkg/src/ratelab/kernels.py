"""Hot solver loops over dense quadratic problems.

Every kernel is written once in numpy-compatible form and compiled with
``numba.njit`` when the active backend is "numba"; the "numpy" backend runs
the identical source interpreted. Both paths execute the same floating point
operations (matvecs go through BLAS either way), so results agree
bit-for-bit on a given platform.

Regularizer codes: 0 = none, 1 = l1 with weight ``w``, 2 = box ``[lo, hi]``.
Status codes: 0 = budget exhausted, 1 = early stop, 2 = nonfinite objective,
3 = safeguard violation (monomial recursion only).

The run kernels fill per-iteration record arrays (objective split into f and
psi, the action taken, the squared step norm) plus iterate snapshots at the
requested k values, and return the number of completed steps so callers can
truncate after an early exit.
"""

from __future__ import annotations

import numpy as np

from ._backend import ACTIVE_BACKEND, jit_wrapper

STATUS_BUDGET = 0
STATUS_EARLY = 1
STATUS_NONFINITE = 2
STATUS_SAFEGUARD = 3

REG_NONE = 0
REG_L1 = 1
REG_BOX = 2


def _gd_fixed_run(a, b, alpha, x0, budget, snap_ks, early, tol):
    n = x0.shape[0]
    x = x0.copy()
    f = np.empty(budget + 1)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.shape[0], n))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    for k in range(budget):
        r = x - b
        g = np.dot(a, r)
        fk = 0.5 * np.dot(r, g)
        f[k] = fk
        if not np.isfinite(fk):
            return f, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        if early and np.dot(g, g) <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        xn = x - alpha * g
        d = xn - x
        dsq[k] = np.dot(d, d)
        x = xn
    if status == STATUS_BUDGET:
        r = x - b
        fb = 0.5 * np.dot(r, np.dot(a, r))
        f[budget] = fb
        if not np.isfinite(fb):
            return f, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, dsq, snap_x, sp, m, status, x


def _prox_fixed_run(a, b, reg_code, w, lo, hi, lbar, x0, budget, snap_ks, early, tol):
    n = x0.shape[0]
    ones = np.ones(n)
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.shape[0], n))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    lam = 1.0 / lbar
    for k in range(budget):
        r = x - b
        g = np.dot(a, r)
        fk = 0.5 * np.dot(r, g)
        pk = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fk + pk):
            return f, psi, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        y = x - g / lbar
        if reg_code == 1:
            xn = np.sign(y) * np.maximum(np.abs(y) - w * lam, 0.0)
        elif reg_code == 2:
            xn = np.minimum(np.maximum(y, lo), hi)
        else:
            xn = y
        d = xn - x
        ds = np.dot(d, d)
        if early and ds <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        dsq[k] = ds
        x = xn
    if status == STATUS_BUDGET:
        r = x - b
        fb = 0.5 * np.dot(r, np.dot(a, r))
        pb = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
        f[budget] = fb
        psi[budget] = pb
        if not np.isfinite(fb + pb):
            return f, psi, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, psi, dsq, snap_x, sp, m, status, x


def _linesearch_run(
    a, b, reg_code, w, lo, hi,
    gamma, c1, c2, shrink, use_bb,
    x0, budget, snap_ks, early, tol,
):
    n = x0.shape[0]
    ones = np.ones(n)
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    steps = np.empty(budget)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.shape[0], n))
    sp = 0
    status = STATUS_BUDGET
    m = budget
    prev_x = np.zeros(n)
    prev_g = np.zeros(n)
    have_prev = False
    for k in range(budget):
        r = x - b
        g = np.dot(a, r)
        fk = 0.5 * np.dot(r, g)
        pk = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
        fobj = fk + pk
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fobj):
            return f, psi, steps, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        if early and reg_code == 0 and np.dot(g, g) <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        if use_bb and have_prev:
            s = x - prev_x
            gd = g - prev_g
            den = np.dot(s, gd)
            if den > 0.0:
                alpha = np.dot(s, s) / den
                if alpha < c2:
                    alpha = c2
                if alpha > c1:
                    alpha = c1
            else:
                alpha = c1
        else:
            alpha = c1
        slack = 1e-12 * max(1.0, abs(fobj))
        floor = alpha <= c2
        cand = x
        ds = 0.0
        while True:
            y = x - alpha * g
            if reg_code == 1:
                cand = np.sign(y) * np.maximum(np.abs(y) - alpha * w, 0.0)
            elif reg_code == 2:
                cand = np.minimum(np.maximum(y, lo), hi)
            else:
                cand = y
            d = cand - x
            ds = np.dot(d, d)
            rc = cand - b
            fc = 0.5 * np.dot(rc, np.dot(a, rc))
            pc = w * np.dot(np.abs(cand), ones) if reg_code == 1 else 0.0
            if floor:
                break
            if fc + pc <= fobj - (gamma / (2.0 * alpha)) * ds + slack:
                break
            nxt = alpha * shrink
            if nxt <= c2:
                alpha = c2
                floor = True
            else:
                alpha = nxt
        if early and reg_code != 0 and ds <= tol * tol:
            m = k
            status = STATUS_EARLY
            break
        steps[k] = alpha
        dsq[k] = ds
        prev_x = x
        prev_g = g
        have_prev = True
        x = cand
    if status == STATUS_BUDGET:
        r = x - b
        fb = 0.5 * np.dot(r, np.dot(a, r))
        pb = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
        f[budget] = fb
        psi[budget] = pb
        if not np.isfinite(fb + pb):
            return f, psi, steps, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == budget:
            snap_x[sp] = x
            sp += 1
    return f, psi, steps, dsq, snap_x, sp, m, status, x


def _cd_run(
    a, b, reg_code, w, lo, hi,
    lbar, cum_p, uniforms,
    x0, budget, snap_ks,
):
    n = x0.shape[0]
    ones = np.ones(n)
    x = x0.copy()
    f = np.empty(budget + 1)
    psi = np.empty(budget + 1)
    idx = np.empty(budget, dtype=np.int64)
    dsq = np.empty(budget)
    snap_x = np.empty((snap_ks.shape[0], n))
    sp = 0
    for k in range(budget):
        r = x - b
        g = np.dot(a, r)
        fk = 0.5 * np.dot(r, g)
        pk = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
        f[k] = fk
        psi[k] = pk
        if not np.isfinite(fk + pk):
            return f, psi, idx, dsq, snap_x, sp, k, STATUS_NONFINITE, x
        if sp < snap_ks.shape[0] and snap_ks[sp] == k:
            snap_x[sp] = x
            sp += 1
        i = np.searchsorted(cum_p, uniforms[k], side="right")
        if i >= n:
            i = n - 1
        y = x[i] - g[i] / lbar[i]
        if reg_code == 1:
            cut = w / lbar[i]
            if y > cut:
                xi = y - cut
            elif y < -cut:
                xi = y + cut
            else:
                xi = 0.0
        elif reg_code == 2:
            xi = min(max(y, lo[i]), hi[i])
        else:
            xi = y
        d = xi - x[i]
        idx[k] = i
        dsq[k] = d * d
        x[i] = xi
    r = x - b
    fb = 0.5 * np.dot(r, np.dot(a, r))
    pb = w * np.dot(np.abs(x), ones) if reg_code == 1 else 0.0
    f[budget] = fb
    psi[budget] = pb
    if not np.isfinite(fb + pb):
        return f, psi, idx, dsq, snap_x, sp, budget, STATUS_NONFINITE, x
    if sp < snap_ks.shape[0] and snap_ks[sp] == budget:
        snap_x[sp] = x
        sp += 1
    return f, psi, idx, dsq, snap_x, sp, budget, STATUS_BUDGET, x


def _monomial_run(p, alpha, x0, budget):
    xs = np.empty(budget + 1)
    xs[0] = x0
    cur = x0
    pa = p * alpha
    m = budget
    status = STATUS_BUDGET
    for k in range(budget):
        if abs(cur) < 1e-100:
            m = k
            status = STATUS_EARLY
            break
        nxt = cur * (1.0 - pa * cur ** (p - 2))
        if 0.0 < cur <= 1.0:
            good = nxt >= (2.0 / 3.0) * cur - 1e-12 * cur and nxt < cur
            if not good:
                m = k
                status = STATUS_SAFEGUARD
                break
        xs[k + 1] = nxt
        cur = nxt
    return xs, m, status


def _rk4_run(p, c, x0, t0, h, steps):
    xs = np.empty(steps + 1)
    xs[0] = x0
    x = x0
    for i in range(steps):
        k1 = -c * x ** (p - 1)
        x2 = x + 0.5 * h * k1
        k2 = -c * x2 ** (p - 1)
        x3 = x + 0.5 * h * k2
        k3 = -c * x3 ** (p - 1)
        x4 = x + h * k3
        k4 = -c * x4 ** (p - 1)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs[i + 1] = x
    return xs


_SOURCES = {
    "gd_fixed_run": _gd_fixed_run,
    "prox_fixed_run": _prox_fixed_run,
    "linesearch_run": _linesearch_run,
    "cd_run": _cd_run,
    "monomial_run": _monomial_run,
    "rk4_run": _rk4_run,
}


def build_kernels(use_numba: bool) -> dict:
    """Compile (or pass through) the full kernel set for one backend."""
    wrap = jit_wrapper(use_numba)
    return {name: wrap(fn) for name, fn in _SOURCES.items()}


KERNELS = build_kernels(ACTIVE_BACKEND == "numba")
