"""Dense phase-one simplex for small feasibility problems ``A y <= b, y >= 0``.

Bland's rule is used for both entering and leaving variables, so the method
cannot cycle on the heavily degenerate (mostly homogeneous) systems produced
by the checkpoint LPs. Compiled with numba; the pure-Python fallback is kept
for environments without it.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

FEASIBLE = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2

PIVOT_TOL = 1e-12
COST_TOL = 1e-11


@njit(cache=True)
def phase_one(A, b, obj_tol):
    """Return ``(status, y)``; ``y`` is a basic feasible point when status is 0."""
    m, nv = A.shape
    n_art = 0
    for r in range(m):
        if b[r] < 0:
            n_art += 1
    y = np.zeros(nv)
    if n_art == 0:
        return FEASIBLE, y
    ncol = nv + m + n_art
    T = np.zeros((m + 1, ncol + 1))
    basis = np.empty(m, np.int64)
    a = nv + m
    for r in range(m):
        s = 1.0 if b[r] >= 0 else -1.0
        for j in range(nv):
            T[r, j] = s * A[r, j]
        T[r, nv + r] = s
        T[r, ncol] = s * b[r]
        if s < 0:
            T[r, a] = 1.0
            basis[r] = a
            a += 1
        else:
            basis[r] = nv + r
    # reduced costs of "minimize sum of artificials"
    for r in range(m):
        if basis[r] >= nv + m:
            for j in range(nv + m):
                T[m, j] -= T[r, j]
            T[m, ncol] -= T[r, ncol]
    max_iter = 50 * (m + ncol) + 1000
    done = False
    for _ in range(max_iter):
        enter = -1
        for j in range(ncol):
            if T[m, j] < -COST_TOL:
                enter = j
                break
        if enter < 0:
            done = True
            break
        leave = -1
        best = 0.0
        for r in range(m):
            if T[r, enter] > PIVOT_TOL:
                ratio = T[r, ncol] / T[r, enter]
                if leave < 0 or ratio < best - 1e-15 or (
                    ratio <= best + 1e-15 and basis[r] < basis[leave]
                ):
                    leave = r
                    best = ratio
        if leave < 0:
            # phase-one objective is bounded below by zero
            return ITERATION_LIMIT, y
        piv = T[leave, enter]
        for j in range(ncol + 1):
            T[leave, j] /= piv
        for r in range(m + 1):
            if r != leave:
                f = T[r, enter]
                if f != 0.0:
                    for j in range(ncol + 1):
                        T[r, j] -= f * T[leave, j]
        basis[leave] = enter
    if not done:
        return ITERATION_LIMIT, y
    if -T[m, ncol] > obj_tol:
        return INFEASIBLE, y
    for r in range(m):
        if basis[r] < nv:
            y[basis[r]] = max(T[r, ncol], 0.0)
    return FEASIBLE, y
