"""Checkpoint positions for a fixed removal pattern via linear feasibility.

For a pattern ``P`` and scaling factor ``gamma`` the question "is there a cyclic
algorithm with discrepancy at most ``lam``?" is a linear feasibility problem in
``t_1 .. t_{k+n}``. The least such ``lam`` is found by bisection, and ``gamma``
by a grid scan bounded above by :func:`gamma_upper_bound`.

The solver works on a reduced form of the problem:

* the ``k`` scaling equalities ``tau_i^n = gamma * tau_i^0`` are eliminated by
  substitution, leaving the ``n - 1`` insertion times ``t_{k+1} .. t_{k+n-1}``
  as free variables (``t_k = 1`` and ``t_{k+n} = gamma`` are fixed);
* a discrepancy row is kept only for intervals that are new at step ``j``;
  an interval that already existed at step ``j - 1`` is dominated by its
  earlier row because ``tau_k^j`` never decreases.

Every answer is checked by substitution into the un-reduced problem.
"""
from __future__ import annotations

import functools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .core import CyclicAlgorithm, CyclicityError, perf_cyclic
from .simplex import FEASIBLE, INFEASIBLE, njit, phase_one

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
LAMBDA_LO = 1.0
LAMBDA_HI = 2.0

_CONST = -1  # variable fixed to gamma**exp
_ZERO = -2  # variable forced to 0 (an initial checkpoint that is never removed)

# problems up to this size go to the dense simplex, larger ones to HiGHS
_DENSE_MAX_VARS = 80
_DENSE_MAX_ROWS = 600


class SolverError(RuntimeError):
    """Numerical trouble in the LP solver, as opposed to a clean infeasible answer."""


class PatternStructure:
    """Symbolic part of the LP: depends only on ``k`` and the pattern."""

    def __init__(self, k: int, pattern: Sequence[int]):
        pattern = tuple(int(p) for p in pattern)
        n = len(pattern)
        if k < 1 or n < 1:
            raise ValueError("need k >= 1 and a non-empty pattern")
        if any(not 1 <= p <= k for p in pattern):
            raise ValueError(f"pattern entries must lie in [1, {k}]")
        self.k, self.pattern, self.n = k, pattern, n
        self.dominated = any(p == k for p in pattern)

        active = np.empty((n + 1, k), dtype=np.int64)
        cur = list(range(1, k + 1))
        active[0] = cur
        deletions = []
        for j, p in enumerate(pattern, start=1):
            deletions.append(cur.pop(p - 1))
            cur.append(k + j)
            active[j] = cur
        self.active = active
        self.deletions = tuple(deletions)

        # t_v = gamma**exp[v] * (y[src[v]] | 1 | 0), v 0-based
        nv = k + n
        src = np.empty(nv, dtype=np.int64)
        exp = np.zeros(nv, dtype=np.int64)
        for v in range(k, nv - 1):
            src[v] = v - k
        src[nv - 1], exp[nv - 1] = _CONST, 1
        after = active[n]
        for i in range(k, 0, -1):
            a = int(after[i - 1])
            if a == i:
                src[i - 1] = _ZERO
            else:
                src[i - 1], exp[i - 1] = src[a - 1], exp[a - 1] - 1
        self.src, self.exp = src, exp
        self.n_free = n - 1

        rows = []  # (var_plus, var_minus, var_last) 0-based, -1 for the origin
        for i in range(1, nv):
            rows.append((i - 1, i, -1, 0))  # t_i - t_{i+1} <= 0
        seen = set()
        for j in range(n + 1):
            tau = [-1, *(int(x) - 1 for x in active[j])]
            now = set()
            for i in range(k):
                pair = (tau[i], tau[i + 1])
                now.add(pair)
                if j == 0 or pair not in seen:
                    rows.append((tau[i + 1], tau[i], tau[k], 1))
            seen = now
        rv = np.full((len(rows), 3), -1, dtype=np.int64)
        c0 = np.zeros((len(rows), 3))
        cl = np.zeros((len(rows), 3))
        for r, (a, b, last, is_disc) in enumerate(rows):
            rv[r, 0], c0[r, 0] = a, 1.0
            rv[r, 1], c0[r, 1] = b, -1.0
            if is_disc:
                rv[r, 2], cl[r, 2] = last, -1.0 / (k + 1)
        self.rows_var, self.rows_c0, self.rows_cl = rv, c0, cl

    @property
    def n_rows(self) -> int:
        return len(self.rows_var)

    def powers(self, gamma: float) -> np.ndarray:
        return float(gamma) ** self.exp.astype(float)

    def positions(self, gamma: float, y: np.ndarray) -> np.ndarray:
        """Positions t_1..t_{k+n} from the free variables.

        Solver output is only feasible up to tolerance, so the insertion times
        are first made monotone within [1, gamma]; the initial checkpoints then
        follow from ``t_i = t_{a_i} / gamma`` with a single divisor, which keeps
        the ordering exact in floating point.
        """
        k, n = self.k, self.n
        t = np.zeros(k + n)
        new = np.empty(n + 1)
        new[0], new[n] = 1.0, gamma
        new[1:n] = y
        t[k - 1:] = np.minimum(np.maximum.accumulate(new), gamma)
        after = self.active[n]
        for i in range(k - 1, 0, -1):
            a = int(after[i - 1])
            t[i - 1] = 0.0 if a == i else t[a - 1] / gamma
        return t


@functools.lru_cache(maxsize=4096)
def pattern_structure(k: int, pattern: tuple[int, ...]) -> PatternStructure:
    return PatternStructure(k, pattern)


@njit(cache=True)
def _assemble(rows_var, rows_c0, rows_cl, src, pw, n_free, lam):
    m = rows_var.shape[0]
    A = np.zeros((m, n_free))
    b = np.zeros(m)
    for r in range(m):
        for q in range(3):
            v = rows_var[r, q]
            if v < 0:
                continue
            s = src[v]
            if s == -2:
                continue
            c = (rows_c0[r, q] + rows_cl[r, q] * lam) * pw[v]
            if s == -1:
                b[r] -= c
            else:
                A[r, s] += c
    return A, b


def _assemble_sparse(st: PatternStructure, pw: np.ndarray, lam: float):
    m = st.n_rows
    b = np.zeros(m)
    rr, cc, vv = [], [], []
    for q in range(3):
        v = st.rows_var[:, q]
        used = v >= 0
        r = np.nonzero(used)[0]
        v = v[used]
        s = st.src[v]
        c = (st.rows_c0[r, q] + st.rows_cl[r, q] * lam) * pw[v]
        const = s == _CONST
        np.add.at(b, r[const], -c[const])
        free = s >= 0
        rr.append(r[free])
        cc.append(s[free])
        vv.append(c[free])
    A = sparse.csr_matrix(
        (np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))), shape=(m, st.n_free)
    )
    return A, b


def _use_dense(st: PatternStructure, backend: str) -> bool:
    if backend == "simplex":
        return True
    if backend == "highs":
        return False
    if backend != "auto":
        raise ValueError(f"unknown backend {backend!r}")
    return st.n_free <= _DENSE_MAX_VARS and st.n_rows <= _DENSE_MAX_ROWS


_HIGHS_ATTEMPTS = (
    ("highs-ds", {"presolve": True}),
    ("highs-ds", {"presolve": False}),
    ("highs-ipm", {"presolve": True}),
)


def _solve_highs(A, b, n_free: int, tol: float, strict: bool = False) -> Optional[np.ndarray]:
    """Feasible ``y`` from HiGHS, ``None`` if infeasible.

    Near the feasibility boundary HiGHS occasionally ends with an unknown model
    status; the next configuration in ``_HIGHS_ATTEMPTS`` is tried before
    giving up, which reports the point as infeasible unless ``strict`` is set.
    A slightly tightened right-hand side absorbs the solver's own
    feasibility tolerance when the first answer fails the substitution check.
    """
    last = None
    for method, opts in _HIGHS_ATTEMPTS:
        for shrink in (0.0, 0.5 * tol):
            res = linprog(
                np.zeros(n_free), A_ub=A, b_ub=b - shrink, bounds=(0, None), method=method,
                options={"primal_feasibility_tolerance": 1e-10, **opts},
            )
            last = res
            if res.status == 2:
                return None
            if res.status != 0:
                break
            y = np.maximum(res.x, 0.0)
            if float(np.max(A @ y - b)) <= tol:
                return y
        else:
            return None
    if strict:
        raise SolverError(f"HiGHS status {last.status}: {last.message}")
    # undecided points only arise right at the boundary; calling them infeasible
    # can only make the reported lambda larger, never wrong
    log.warning("HiGHS undecided (%s); treating as infeasible", last.message)
    return None


def _feasible(
    st: PatternStructure, gamma: float, lam: float, backend: str = "auto", tol: float = FEAS_TOL
) -> Optional[np.ndarray]:
    """Free-variable vector ``y`` of a solution, or ``None`` if infeasible."""
    pw = st.powers(gamma)
    if _use_dense(st, backend):
        A, b = _assemble(st.rows_var, st.rows_c0, st.rows_cl, st.src, pw, st.n_free, lam)
        status, y = phase_one(A, b, 1e-12)
        if status == INFEASIBLE:
            return None
        if status != FEASIBLE:
            # rounding can stall Bland's rule on near-degenerate tableaus
            log.debug("simplex iteration limit for %s at gamma=%r lam=%r; using HiGHS",
                      st.pattern, gamma, lam)
            y = _solve_highs(A, b, st.n_free, tol)
            if y is None:
                return None
        viol = float(np.max(A @ y - b)) if len(b) else 0.0
    else:
        A, b = _assemble_sparse(st, pw, lam)
        if st.n_free == 0:
            y = np.zeros(0)
        else:
            y = _solve_highs(A, b, st.n_free, tol)
            if y is None:
                return None
        viol = float(np.max(A @ y - b)) if len(b) else 0.0
    if viol > tol:
        return None
    return y


# -- public LP surface --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LpProblem:
    """Feasibility problem for fixed ``(pattern, gamma, lam)``.

    ``active[j]`` lists the (1-based) global indices of the active checkpoints
    after ``j`` steps of the period, i.e. the variables behind ``tau_1^j .. tau_k^j``.
    """

    structure: PatternStructure
    gamma: float
    lam: float

    @property
    def k(self) -> int:
        return self.structure.k

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def pattern(self) -> tuple[int, ...]:
        return self.structure.pattern

    @property
    def active(self) -> np.ndarray:
        return self.structure.active

    @property
    def dominated(self) -> bool:
        """True if some step removes the currently last checkpoint."""
        return self.structure.dominated

    @property
    def n_variables(self) -> int:
        return self.k + self.n

    @property
    def n_ordering(self) -> int:
        return self.k + self.n - 1

    @property
    def n_scaling(self) -> int:
        return self.k

    @property
    def n_discrepancy(self) -> int:
        return self.k * (self.n + 1)

    @property
    def n_constraints(self) -> int:
        return self.n_ordering + self.n_scaling + self.n_discrepancy

    def constraint_counts(self) -> dict:
        return {
            "variables": self.n_variables,
            "ordering": self.n_ordering,
            "scaling": self.n_scaling,
            "discrepancy": self.n_discrepancy,
            "total": self.n_constraints,
        }

    def violations(self, positions: Sequence[float]) -> dict:
        """Largest violation of each constraint family at ``positions`` (t_1..t_{k+n})."""
        t = np.asarray(positions, dtype=float)
        k, n = self.k, self.n
        tau = np.zeros((n + 1, k + 1))
        tau[:, 1:] = t[self.active - 1]
        ordering = float(np.max(t[:-1] - t[1:], initial=0.0))
        scaling = float(np.max(np.abs(tau[n, 1:] - self.gamma * tau[0, 1:])))
        disc = np.diff(tau, axis=1) - self.lam * tau[:, k:k + 1] / (k + 1)
        return {
            "ordering": max(ordering, float(-t.min())),
            "scaling": scaling,
            "discrepancy": float(disc.max()),
            "normalization": abs(t[k - 1] - 1.0),
        }

    def max_violation(self, positions: Sequence[float]) -> float:
        return max(self.violations(positions).values())


def build_lp(k: int, pattern: Sequence[int], gamma: float, lam: float, validate: bool = True) -> LpProblem:
    """Build the three constraint families for ``(k, pattern, gamma, lam)``.

    ``validate=False`` skips the range checks on ``gamma`` and ``lam``; the
    solver then simply reports infeasibility for nonsensical inputs.
    """
    st = pattern_structure(int(k), tuple(int(p) for p in pattern))
    if validate:
        if not gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {gamma}")
        if not 0 < lam <= k + 1:
            raise ValueError(f"lam must lie in (0, k+1], got {lam}")
    return LpProblem(st, float(gamma), float(lam))


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    positions: Optional[tuple[float, ...]] = None
    max_violation: Optional[float] = None


def solve_feasibility(lp: LpProblem, backend: str = "auto", tol: float = FEAS_TOL) -> Feasibility:
    """Decide feasibility; returned positions are checked against every constraint."""
    st = lp.structure
    y = _feasible(st, lp.gamma, lp.lam, backend, tol)
    if y is None:
        return Feasibility(False)
    t = st.positions(lp.gamma, y)
    viol = lp.max_violation(t)
    if viol > tol:
        # the reduced rows passed but the full system did not
        raise SolverError(f"substitution check failed: max violation {viol:.3e}")
    return Feasibility(True, tuple(float(x) for x in t), viol)


def gamma_upper_bound(k: int, lam: float, n: int) -> float:
    """Largest scaling factor of an n-step cyclic algorithm with discrepancy ``lam``."""
    if lam >= k + 1:
        raise ValueError(f"lam={lam} must be below k+1={k + 1}")
    if lam < 0 or n < 1:
        raise ValueError("need lam >= 0 and n >= 1")
    return (1.0 - lam / (k + 1)) ** (-n)


@dataclass
class OptimizationResult:
    k: int
    pattern: tuple[int, ...]
    gamma: Optional[float]
    lam: Optional[float]
    positions: Optional[tuple[float, ...]]
    feasible: bool
    solves: int = 0
    gamma_evaluations: int = 0
    wall_time: float = 0.0
    perf: Optional[float] = None
    coincident: bool = False
    counts: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.pattern)

    def algorithm(self) -> CyclicAlgorithm:
        if not self.feasible:
            raise ValueError("no algorithm for an infeasible result")
        return CyclicAlgorithm(self.k, self.pattern, self.positions, self.gamma, name="lp")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "pattern": list(self.pattern),
            "gamma": self.gamma,
            "lambda": self.lam,
            "perf": self.perf,
            "feasible": self.feasible,
            "positions": None if self.positions is None else list(self.positions),
            "coincident_checkpoints": self.coincident,
            "constraint_counts": self.counts,
            "solves": self.solves,
            "gamma_evaluations": self.gamma_evaluations,
            "wall_time": self.wall_time,
        }


def _finish(res: OptimizationResult, verify: bool = True) -> OptimizationResult:
    if not res.feasible:
        return res
    lp = build_lp(res.k, res.pattern, res.gamma, res.lam, validate=False)
    res.counts = lp.constraint_counts()
    viol = lp.max_violation(res.positions)
    if viol > FEAS_TOL:
        raise SolverError(f"result violates constraints by {viol:.3e}")
    t = res.positions
    res.coincident = any(b <= a for a, b in zip(t, t[1:]))
    if verify:
        alg = res.algorithm()
        try:
            alg.check_cyclicity()
        except CyclicityError as exc:  # pragma: no cover - would be a solver bug
            raise SolverError(f"optimizer returned a non-cyclic algorithm: {exc}") from exc
        res.perf = perf_cyclic(alg)
        if res.perf > res.lam + 1e-6:
            raise SolverError(f"measured discrepancy {res.perf} exceeds lambda {res.lam}")
    return res


def _bisect(st, gamma, lo, hi, eps, backend, y_hi=None):
    """Least feasible lam in [lo, hi] to within eps; ``hi`` must be feasible (y_hi)."""
    solves = 0
    if y_hi is None:
        y_hi = _feasible(st, gamma, hi, backend)
        solves += 1
        if y_hi is None:
            return None, None, solves
    while hi - lo > eps:
        mid = 0.5 * (lo + hi)
        y = _feasible(st, gamma, mid, backend)
        solves += 1
        if y is None:
            lo = mid
        else:
            hi, y_hi = mid, y
    return hi, y_hi, solves


def optimize_lambda(
    k: int,
    pattern: Sequence[int],
    gamma: float,
    eps: float = 1e-6,
    lo: float = LAMBDA_LO,
    hi: float = LAMBDA_HI,
    backend: str = "auto",
) -> OptimizationResult:
    """Smallest feasible discrepancy for fixed pattern and gamma by bisection on [lo, hi]."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    t0 = time.perf_counter()
    pattern = tuple(int(p) for p in pattern)
    st = pattern_structure(k, pattern)
    lam, y, solves = _bisect(st, gamma, lo, hi, eps, backend)
    res = OptimizationResult(k, pattern, gamma, lam, None, lam is not None, solves, 1)
    if lam is not None:
        res.positions = tuple(float(x) for x in st.positions(gamma, y))
    res.wall_time = time.perf_counter() - t0
    return _finish(res)


def gamma_grid(lo: float, hi: float, step: float) -> list[float]:
    if not step > 0:
        raise ValueError("gamma_step must be positive")
    if not hi > lo:
        raise ValueError(f"empty gamma range ({lo}, {hi}]")
    count = int(math.floor((hi - lo) / step + 1e-9))
    grid = [lo + j * step for j in range(1, count + 1)]
    return grid or [hi]


def _coarse_first(m: int, stride: int = 16) -> list[int]:
    head = list(range(0, m, stride))
    return head + [j for j in range(m) if j % stride]


def optimize_gamma(
    k: int,
    pattern: Sequence[int],
    gamma_step: float = 1e-3,
    eps: float = 1e-6,
    gamma_min: float = 1.0,
    gamma_max: Optional[float] = None,
    refine: bool = True,
    cutoff: Optional[float] = None,
    backend: str = "auto",
    verify: bool = True,
) -> OptimizationResult:
    """Scan gamma over ``(gamma_min, gamma_max]`` and bisect lam at promising points.

    ``gamma_max`` defaults to the scaling bound for discrepancy 2. A gamma is
    only bisected if it beats the incumbent by more than ``eps``, so the cost of
    most grid points is one feasibility solve. With ``cutoff`` the scan only
    looks for results below ``cutoff - eps`` and reports infeasible otherwise.
    """
    t0 = time.perf_counter()
    pattern = tuple(int(p) for p in pattern)
    n = len(pattern)
    st = pattern_structure(k, pattern)
    if gamma_max is None:
        gamma_max = gamma_upper_bound(k, LAMBDA_HI, n)
    grid = gamma_grid(gamma_min, gamma_max, gamma_step)

    best_lam = None
    best_gamma = None
    best_y = None
    target = LAMBDA_HI if cutoff is None else min(LAMBDA_HI, cutoff - eps)
    solves = evaluated = 0

    def visit(g: float) -> None:
        nonlocal best_lam, best_gamma, best_y, target, solves, evaluated
        if target < LAMBDA_LO or g > gamma_upper_bound(k, target, n) * (1 + 1e-12):
            return
        evaluated += 1
        y = _feasible(st, g, target, backend)
        solves += 1
        if y is None:
            return
        lam, y, s = _bisect(st, g, LAMBDA_LO, target, eps, backend, y_hi=y)
        solves += s
        best_lam, best_gamma, best_y = lam, g, y
        target = lam - eps

    for j in _coarse_first(len(grid)):
        visit(grid[j])
    if refine and best_gamma is not None:
        fine = gamma_step / 10
        centre = best_gamma
        for m in range(1, 10):
            for g in (centre - m * fine, centre + m * fine):
                if gamma_min < g <= gamma_max:
                    visit(g)

    res = OptimizationResult(k, pattern, best_gamma, best_lam, None, best_lam is not None,
                             solves, evaluated)
    if best_lam is not None:
        res.positions = tuple(float(x) for x in st.positions(best_gamma, best_y))
    res.wall_time = time.perf_counter() - t0
    return _finish(res, verify)
