"""Search over removal patterns: exhaustive enumeration and randomized local search."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .core import CyclicAlgorithm, perf_cyclic, to_json
from .lp import OptimizationResult, gamma_upper_bound, optimize_gamma

RESTART_AFTER = 50


@dataclass(frozen=True)
class PatternCandidate:
    k: int
    pattern: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.pattern)

    def is_canonical(self) -> bool:
        p = self.pattern
        return bool(p) and p[-1] == 1 and all(1 <= x <= self.k - 1 for x in p)


def enumerate_patterns(k: int, n: int) -> Iterator[PatternCandidate]:
    """All canonical patterns of length n: entries in [1, k-1], last entry 1.

    Lexicographic order; ``(k - 1) ** (n - 1)`` candidates.
    """
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 and n >= 1")
    for head in itertools.product(range(1, k), repeat=n - 1):
        yield PatternCandidate(k, (*head, 1))


@dataclass
class SearchReport:
    k: int
    mode: str
    best: Optional[OptimizationResult] = None
    best_by_n: dict = field(default_factory=dict)
    evaluated: int = 0
    pruned: dict = field(default_factory=dict)
    complete: bool = True
    seed: Optional[int] = None
    wall_time: float = 0.0
    history: list = field(default_factory=list)

    @property
    def lam(self) -> Optional[float]:
        return None if self.best is None else self.best.lam

    def to_dict(self) -> dict:
        doc = {
            "k": self.k,
            "mode": self.mode,
            "seed": self.seed,
            "complete": self.complete,
            "evaluated": self.evaluated,
            "pruned": self.pruned,
            "wall_time": self.wall_time,
            "best_lambda": self.lam,
            "best_by_n": {str(n): r.to_dict() for n, r in sorted(self.best_by_n.items())},
            "best": None if self.best is None else self.best.to_dict(),
        }
        if self.best is not None:
            import json

            doc["algorithm"] = json.loads(to_json(self.best.algorithm()))
        return doc


def _better(res: OptimizationResult, best: Optional[OptimizationResult], eps: float) -> bool:
    return res.feasible and (best is None or res.lam < best.lam - eps)


def exhaustive_search(
    k: int,
    n_max: Optional[int] = None,
    gamma_step: float = 1e-3,
    eps: float = 1e-6,
    budget: Optional[float] = None,
    backend: str = "auto",
) -> SearchReport:
    """Try every canonical pattern of length 1..n_max; deterministic.

    Patterns are visited by length, then lexicographically; a later pattern
    replaces the incumbent only if it is better by more than ``eps``, so ties
    go to the shortest, lexicographically smallest pattern. Each pattern is
    scanned with the best result of its length as cutoff, so most are
    rejected cheaply while ``best_by_n`` stays exact.
    ``budget`` is a wall-clock limit in seconds; when it runs out the report
    is returned with ``complete=False``.
    """
    if n_max is None:
        n_max = k
    t0 = time.perf_counter()
    report = SearchReport(k, "exhaustive")
    report.pruned = {
        "last_checkpoint": 0,
        "cyclic_shift": 0,
        "never_removes_first": 0,
    }
    for n in range(1, n_max + 1):
        # rule-by-rule accounting of the k**n raw patterns
        report.pruned["cyclic_shift"] += k ** (n - 1) * (k - 1)
        report.pruned["last_checkpoint"] += k ** (n - 1) - (k - 1) ** (n - 1)
        best_n = None
        for cand in enumerate_patterns(k, n):
            if budget is not None and time.perf_counter() - t0 > budget:
                report.complete = False
                break
            cutoff = None if best_n is None else best_n.lam
            res = optimize_gamma(k, cand.pattern, gamma_step, eps, cutoff=cutoff,
                                 backend=backend, verify=False)
            report.evaluated += 1
            if _better(res, best_n, eps):
                best_n = res
        if best_n is not None:
            report.best_by_n[n] = best_n
            if _better(best_n, report.best, eps):
                report.best = best_n
        if not report.complete:
            break
    if report.best is not None:
        _revalidate(report.best)
    report.wall_time = time.perf_counter() - t0
    return report


def _revalidate(res: OptimizationResult) -> None:
    alg = res.algorithm()
    alg.check_cyclicity()
    res.perf = perf_cyclic(alg)
    if res.perf > res.lam + 1e-6:
        raise AssertionError(f"best result re-evaluates to {res.perf} > {res.lam}")


def _rotation_key(pattern: tuple[int, ...]) -> tuple[int, ...]:
    """Smallest rotation that still ends in 1; rotations describe the same cycle."""
    n = len(pattern)
    return min(pattern[i + 1:] + pattern[:i + 1] for i in range(n) if pattern[i] == 1)


def _random_pattern(rng: np.random.Generator, k: int, n: int) -> tuple[int, ...]:
    return (*(int(x) for x in rng.integers(1, k, size=n - 1)), 1)


def local_search(
    k: int,
    n: int,
    iterations: int,
    seed: int = 0,
    gamma_step: float = 1e-3,
    eps: float = 1e-6,
    budget: Optional[float] = None,
    backend: str = "auto",
) -> SearchReport:
    """Randomized local search over canonical patterns of length n.

    A move changes one uniformly chosen entry among the first n-1 to a different
    value in [1, k-1]; it is kept only if it lowers the discrepancy. Once
    ``RESTART_AFTER`` distinct neighbours of the current pattern have been
    rejected (or all of them, if there are fewer) the walk restarts from a
    fresh random pattern. ``iterations`` counts candidate evaluations; moves
    already known to fail are skipped for free, and ``iterations=1`` just
    evaluates the random start.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if k < 2 or n < 1:
        raise ValueError("need k >= 2 and n >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    report = SearchReport(k, "local", seed=seed)
    report.pruned = {"cached": 0}
    cache: dict[tuple[int, ...], Optional[float]] = {}

    def evaluate(pattern, cutoff):
        res = optimize_gamma(k, pattern, gamma_step, eps, cutoff=cutoff,
                             backend=backend, verify=False)
        report.evaluated += 1
        report.history.append((pattern, res.lam))
        return res

    neighbours = (n - 1) * (k - 2)
    current = _random_pattern(rng, k, n)
    cur_res = evaluate(current, None)
    report.best = cur_res if cur_res.feasible else None
    cur_lam = cur_res.lam if cur_res.feasible else np.inf
    rejected: set[tuple[int, ...]] = set()
    while report.evaluated < iterations:
        if budget is not None and time.perf_counter() - t0 > budget:
            report.complete = False
            break
        if len(rejected) >= min(RESTART_AFTER, neighbours):
            current = _random_pattern(rng, k, n)
            cur_res = evaluate(current, None)
            cur_lam = cur_res.lam if cur_res.feasible else np.inf
            if _better(cur_res, report.best, eps):
                report.best = cur_res
            rejected.clear()
            continue
        j = int(rng.integers(n - 1))
        value = int(rng.integers(1, k - 1))
        if value >= current[j]:
            value += 1
        cand = current[:j] + (value,) + current[j + 1:]
        key = _rotation_key(cand)
        if cand in rejected or (key in cache and cache[key] >= cur_lam - eps):
            # known not to improve; costs no evaluation
            report.pruned["cached"] += 1
            rejected.add(cand)
            continue
        res = evaluate(cand, None if not np.isfinite(cur_lam) else cur_lam)
        if res.feasible and res.lam < cur_lam - eps:
            current, cur_lam = cand, res.lam
            rejected.clear()
            cache[key] = res.lam
            if _better(res, report.best, eps):
                report.best = res
        else:
            cache[key] = cur_lam
            rejected.add(cand)
    if report.best is not None:
        _revalidate(report.best)
        report.best_by_n[n] = report.best
    report.wall_time = time.perf_counter() - t0
    return report


@dataclass
class Comparison:
    algorithm: str
    k: int
    perf: float
    optimized: OptimizationResult

    @property
    def improvement(self) -> float:
        """Relative improvement of the optimized discrepancy over the algorithm's own."""
        return (self.perf - self.optimized.lam) / self.perf

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "k": self.k,
            "perf": self.perf,
            "optimized_lambda": self.optimized.lam,
            "optimized_gamma": self.optimized.gamma,
            "improvement": self.improvement,
            "solves": self.optimized.solves,
            "wall_time": self.optimized.wall_time,
        }


def optimize_positions_for(
    algorithm: CyclicAlgorithm,
    gamma_step: Optional[float] = None,
    eps: float = 1e-6,
    backend: str = "auto",
) -> Comparison:
    """Re-optimize positions and gamma for the algorithm's own pattern.

    The algorithm itself is a feasible point at its own gamma, so its measured
    discrepancy caps the search. The gamma scan covers everything allowed by
    that cap; ``gamma_step`` defaults to 1/200 of the range, refined twice.
    """
    k, n = algorithm.k, algorithm.n
    perf = perf_cyclic(algorithm)
    hi = gamma_upper_bound(k, min(perf, 2.0), n)
    step = gamma_step if gamma_step is not None else (hi - 1.0) / 200
    res = optimize_gamma(k, algorithm.pattern, step, eps, gamma_max=hi,
                         cutoff=perf + 2 * eps, backend=backend)
    # two further zoom passes around the best gamma
    for _ in range(2):
        if not res.feasible:
            break
        step /= 10
        lo_g = max(1.0, res.gamma - 10 * step)
        zoom = optimize_gamma(k, algorithm.pattern, step, eps, gamma_min=lo_g,
                              gamma_max=min(hi, res.gamma + 10 * step),
                              refine=False, cutoff=res.lam, backend=backend)
        if zoom.feasible:
            zoom.solves += res.solves
            zoom.gamma_evaluations += res.gamma_evaluations
            zoom.wall_time += res.wall_time
            res = zoom
    if not res.feasible or res.lam > perf:
        # nothing on the grid beats the algorithm's own placement
        res = OptimizationResult(k, algorithm.pattern, algorithm.gamma, perf,
                                 algorithm.positions, True, res.solves,
                                 res.gamma_evaluations, res.wall_time, perf)
    return Comparison(algorithm.name or "custom", k, perf, res)
