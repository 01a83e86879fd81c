"""Checkpointing model: schedules, active sets and max-distance discrepancy.

Indices follow the usual 1-based convention of the model: ``times[0]`` is
``t_1`` and the deletion made at step ``i`` (``i > k``) is ``deletions[i - k - 1]``.
A step index ``i`` always refers to the moment the ``i``-th checkpoint is set.
"""
from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

REL_TOL = 1e-9


class ScheduleError(ValueError):
    """Invalid schedule; ``step`` names the offending step when known."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class CyclicityError(ValueError):
    """Intervals after one period are not a scaled copy of the initial ones."""

    def __init__(self, message: str, interval: int):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True)
class Schedule:
    k: int
    times: tuple[float, ...]
    deletions: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "deletions", tuple(int(d) for d in self.deletions))
        k = self.k
        if k < 1:
            raise ScheduleError(f"k must be positive, got {k}")
        if len(self.times) < k:
            raise ScheduleError(f"need at least k={k} times, got {len(self.times)}")
        if len(self.deletions) != len(self.times) - k:
            raise ScheduleError(
                f"expected {len(self.times) - k} deletions, got {len(self.deletions)}"
            )
        for a, b in zip(self.times, self.times[1:]):
            if b < a or math.isnan(b):
                raise ScheduleError("times must be non-decreasing")
        if not self.times[k - 1] > 0:
            raise ScheduleError("t_k must be positive")
        deleted: set[int] = set()
        for i, d in enumerate(self.deletions, start=k + 1):
            if not 1 <= d < i:
                raise ScheduleError(f"step {i}: deletion index {d} not in [1, {i})", step=i)
            if d in deleted:
                raise ScheduleError(f"step {i}: checkpoint {d} already deleted", step=i)
            deleted.add(d)

    @property
    def steps(self) -> int:
        """Number of insert/delete steps after the initial k checkpoints."""
        return len(self.deletions)

    @property
    def last_step(self) -> int:
        return len(self.times)

    def scaled(self, c: float) -> Schedule:
        return Schedule(self.k, tuple(c * t for t in self.times), self.deletions)


@dataclass(frozen=True)
class ActiveSet:
    checkpoints: tuple[float, ...]
    current_time: float

    @property
    def k(self) -> int:
        return len(self.checkpoints)

    def intervals(self) -> np.ndarray:
        """The k+1 interval lengths including the implicit endpoints 0 and T."""
        pts = np.empty(self.k + 2)
        pts[0] = 0.0
        pts[1:-1] = self.checkpoints
        pts[-1] = self.current_time
        return np.diff(pts)


class StepDiscrepancy(NamedTuple):
    step: int
    time: float
    q: float
    interval_lo: float
    interval_hi: float


@dataclass(frozen=True)
class DiscrepancyReport:
    k: int
    per_step: tuple[StepDiscrepancy, ...]
    sup: float = field(init=False)
    argmax: StepDiscrepancy = field(init=False)

    def __post_init__(self):
        best = self.per_step[0]
        for row in self.per_step[1:]:
            if row.q > best.q:
                best = row
        object.__setattr__(self, "sup", best.q)
        object.__setattr__(self, "argmax", best)

    @property
    def steps_evaluated(self) -> int:
        return len(self.per_step)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "q", "interval_lo", "interval_hi"])
        for r in self.per_step:
            w.writerow([r.step, repr(r.time), repr(r.q), repr(r.interval_lo), repr(r.interval_hi)])
        return buf.getvalue()


def _interval_q(k: int, lo: float, hi: float, T: float) -> float:
    # the single formula shared by the full and incremental evaluators
    return (k + 1) * (hi - lo) / T


def discrepancy_at(active: ActiveSet, k: int | None = None) -> tuple[float, tuple[float, float]]:
    """Return ``(q, (lo, hi))`` for the longest interval of ``active``.

    Ties go to the earliest interval.
    """
    if k is None:
        k = active.k
    if len(active.checkpoints) != k:
        raise ValueError(f"active set has {len(active.checkpoints)} checkpoints, expected {k}")
    T = active.current_time
    if not T > 0:
        raise ValueError(f"current time must be positive, got {T}")
    if k and active.checkpoints[-1] > T:
        raise ValueError("current time precedes the last checkpoint")
    pts = np.empty(k + 2)
    pts[0] = 0.0
    pts[1:-1] = active.checkpoints
    pts[-1] = T
    j = int(np.argmax(np.diff(pts)))  # first maximum
    lo, hi = float(pts[j]), float(pts[j + 1])
    return _interval_q(k, lo, hi, T), (lo, hi)


def _check_step(schedule: Schedule, i: int) -> None:
    if not schedule.k <= i <= schedule.last_step:
        raise ScheduleError(
            f"step {i} outside [{schedule.k}, {schedule.last_step}]", step=i
        )


def active_indices(schedule: Schedule, i: int) -> list[int]:
    """Global (1-based) indices of the checkpoints active right after step ``i``."""
    _check_step(schedule, i)
    k = schedule.k
    active = list(range(1, k + 1))
    for step in range(k + 1, i + 1):
        d = schedule.deletions[step - k - 1]
        pos = bisect.bisect_left(active, d)
        if pos == len(active) or active[pos] != d:
            raise ScheduleError(f"step {step}: checkpoint {d} is not active", step=step)
        del active[pos]
        active.append(step)
    return active


def evolve(schedule: Schedule, i: int) -> ActiveSet:
    idx = active_indices(schedule, i)
    t = schedule.times
    return ActiveSet(tuple(t[j - 1] for j in idx), t[i - 1])


def perf_full(schedule: Schedule) -> DiscrepancyReport:
    """Evaluate q at every step time ``t_k, ..., t_m`` by scanning all intervals."""
    rows = []
    for i, cps in iter_active_sets(schedule):
        q, (lo, hi) = discrepancy_at(cps, schedule.k)
        rows.append(StepDiscrepancy(i, cps.current_time, q, lo, hi))
    return DiscrepancyReport(schedule.k, tuple(rows))


def perf_incremental(schedule: Schedule) -> DiscrepancyReport:
    """Running supremum of q using only the intervals created at each step.

    Per-step values are the running maximum up to that step, so the final
    value equals the supremum of :func:`perf_full`.
    """
    k, t = schedule.k, schedule.times
    cps = ActiveSet(t[:k], t[k - 1])
    q, (lo, hi) = discrepancy_at(cps, k)
    best = StepDiscrepancy(k, t[k - 1], q, lo, hi)
    rows = [best]
    active = list(range(1, k + 1))
    for i in range(k + 1, schedule.last_step + 1):
        T = t[i - 1]
        d = schedule.deletions[i - k - 1]
        pos = bisect.bisect_left(active, d)
        del active[pos]
        active.append(i)
        # merged interval around the removed checkpoint, then the insertion interval
        merged_lo = t[active[pos - 1] - 1] if pos > 0 else 0.0
        merged_hi = t[active[pos] - 1]
        ins_lo = t[active[-2] - 1] if k > 1 else 0.0
        for lo, hi in ((merged_lo, merged_hi), (ins_lo, T)):
            q = _interval_q(k, lo, hi, T)
            if q > best.q:
                best = StepDiscrepancy(i, T, q, lo, hi)
        rows.append(best)
    return DiscrepancyReport(k, tuple(rows))


def deletions_to_pattern(k: int, deletions: Sequence[int]) -> tuple[int, ...]:
    """Translate global deletion indices d_i into active-set indices p_i."""
    seen: list[int] = []
    pattern = []
    for d in deletions:
        pattern.append(d - bisect.bisect_left(seen, d))
        bisect.insort(seen, d)
    return tuple(pattern)


def pattern_to_deletions(k: int, pattern: Sequence[int], start: int | None = None) -> tuple[int, ...]:
    """Inverse of :func:`deletions_to_pattern` for a run starting at step k+1."""
    active = list(range(1, k + 1))
    step = k + 1
    out = []
    for p in pattern:
        if not 1 <= p <= k:
            raise ScheduleError(f"step {step}: pattern entry {p} not in [1, {k}]", step=step)
        out.append(active.pop(p - 1))
        active.append(step)
        step += 1
    return tuple(out)


@dataclass(frozen=True)
class CyclicAlgorithm:
    """Periodic algorithm given by one period: pattern and positions t_1..t_{k+n}."""

    k: int
    pattern: tuple[int, ...]
    positions: tuple[float, ...]
    gamma: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(int(p) for p in self.pattern))
        object.__setattr__(self, "positions", tuple(float(x) for x in self.positions))
        k, n = self.k, len(self.pattern)
        if k < 1 or n < 1:
            raise ValueError("need k >= 1 and a non-empty pattern")
        if len(self.positions) != k + n:
            raise ValueError(f"expected {k + n} positions, got {len(self.positions)}")
        if any(not 1 <= p <= k for p in self.pattern):
            raise ValueError(f"pattern entries must lie in [1, {k}]")
        if not self.gamma > 1:
            raise ValueError(f"scaling factor must exceed 1, got {self.gamma}")
        if not math.isclose(self.positions[k - 1], 1.0, rel_tol=REL_TOL):
            raise ValueError("positions must be normalized to t_k = 1")
        if not math.isclose(self.positions[-1], self.gamma, rel_tol=REL_TOL):
            raise ValueError("last position must equal gamma")
        if self.positions[0] < 0 or any(b < a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("positions must be non-negative and non-decreasing")

    @property
    def n(self) -> int:
        return len(self.pattern)

    @property
    def deletions(self) -> tuple[int, ...]:
        return pattern_to_deletions(self.k, self.pattern)

    def period_intervals(self) -> tuple[np.ndarray, np.ndarray]:
        """Interval lengths at t_k and after one period at t_{k+n}."""
        sched = Schedule(self.k, self.positions, self.deletions)
        first = evolve(sched, self.k).intervals()
        last = evolve(sched, self.k + self.n).intervals()
        return first, last

    def check_cyclicity(self, rel_tol: float = REL_TOL) -> None:
        first, last = self.period_intervals()
        abs_tol = 1e-12 * self.gamma
        for j, (a, b) in enumerate(zip(first, last)):
            if not math.isclose(b, self.gamma * a, rel_tol=rel_tol, abs_tol=abs_tol):
                raise CyclicityError(
                    f"interval {j}: {b!r} after one period, expected {self.gamma * a!r}",
                    interval=j,
                )


def unroll(cyclic: CyclicAlgorithm, periods: int, check: bool = True) -> Schedule:
    """Expand ``periods`` repetitions of a cyclic algorithm into a schedule."""
    if periods < 0:
        raise ValueError("periods must be non-negative")
    if check:
        cyclic.check_cyclicity()
    k = cyclic.k
    base = cyclic.positions[k:]
    times = list(cyclic.positions[:k])
    scale = 1.0
    for _ in range(periods):
        times.extend(scale * x for x in base)
        scale *= cyclic.gamma
    deletions = pattern_to_deletions(k, cyclic.pattern * periods)
    return Schedule(k, tuple(times), deletions)


def perf_cyclic(cyclic: CyclicAlgorithm) -> float:
    """Exact discrepancy of a cyclic algorithm: the maximum over one period."""
    return perf_full(unroll(cyclic, 1)).sup


@dataclass(frozen=True)
class IntegerSchedule:
    schedule: Schedule
    scale: float
    collapsed: tuple[tuple[int, int], ...]
    max_recompute: tuple[int, ...]
    discrete_q: tuple[float, ...]

    @property
    def times(self) -> tuple[int, ...]:
        return tuple(int(t) for t in self.schedule.times)


def integerize(schedule: Schedule, scale: float = 1.0) -> IntegerSchedule:
    """Round ``scale * t_i`` down to integers and measure the discrete recompute cost.

    ``max_recompute[i]`` is the largest number of steps to redo over all
    intervals at step ``k + i``; ``discrete_q`` divides it by the continuous
    time, so it never exceeds the continuous discrepancy.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    scaled = [scale * t for t in schedule.times]
    if scaled[0] < 1:
        raise ValueError(
            f"scale {scale} too small: first checkpoint {scaled[0]!r} collapses below 1"
        )
    ints = [math.floor(x) for x in scaled]
    collapsed = tuple((i, i + 1) for i in range(1, len(ints)) if ints[i - 1] == ints[i])
    out = Schedule(schedule.k, tuple(float(x) for x in ints), schedule.deletions)
    k = schedule.k
    recompute, dq = [], []
    for i in range(k, schedule.last_step + 1):
        idx = active_indices(schedule, i)
        pts = [0, *(ints[j - 1] for j in idx)]
        worst = max(max(b - a - 1, 0) for a, b in zip(pts, pts[1:]))
        recompute.append(worst)
        dq.append((k + 1) * worst / scaled[i - 1])
    return IntegerSchedule(out, scale, collapsed, tuple(recompute), tuple(dq))


# -- serialization -----------------------------------------------------------

def to_json(obj: CyclicAlgorithm | Schedule) -> str:
    """Serialize with fixed field order ``k, n, pattern, times, gamma``."""
    if isinstance(obj, CyclicAlgorithm):
        doc = {
            "k": obj.k,
            "n": obj.n,
            "pattern": list(obj.pattern),
            "times": list(obj.positions),
            "gamma": obj.gamma,
        }
    else:
        tk = obj.times[obj.k - 1]
        doc = {
            "k": obj.k,
            "n": obj.steps,
            "pattern": list(deletions_to_pattern(obj.k, obj.deletions)),
            "times": [t / tk for t in obj.times],
            "gamma": None,
        }
    return json.dumps(doc, indent=2)


def from_json(text: str | dict) -> CyclicAlgorithm | Schedule:
    doc = json.loads(text) if isinstance(text, str) else text
    k, pattern, times = doc["k"], doc["pattern"], doc["times"]
    if doc.get("gamma") is None:
        return Schedule(k, times, pattern_to_deletions(k, pattern))
    return CyclicAlgorithm(k, pattern, times, doc["gamma"])


def random_schedule(rng: np.random.Generator, k: int, steps: int) -> Schedule:
    """A random valid schedule with exponential gaps and occasional tied times."""
    total = k + steps
    gaps = rng.exponential(size=total)
    if rng.random() < 0.2 and total > 1:
        # exercise tied checkpoint times
        gaps[rng.integers(1, total, size=max(1, total // 5))] = 0.0
    times = np.cumsum(gaps)
    times[k - 1:] = np.maximum(times[k - 1:], 1e-3)
    active = list(range(1, k + 1))
    deletions = []
    for i in range(k + 1, total + 1):
        d = active.pop(int(rng.integers(len(active))))
        deletions.append(d)
        active.append(i)
    return Schedule(k, tuple(times), tuple(deletions))


def interval_lengths(schedule: Schedule, i: int) -> np.ndarray:
    return evolve(schedule, i).intervals()


def iter_active_sets(schedule: Schedule) -> Iterable[tuple[int, ActiveSet]]:
    k, t = schedule.k, schedule.times
    active = list(range(1, k + 1))
    for i in range(k, schedule.last_step + 1):
        if i > k:
            del active[bisect.bisect_left(active, schedule.deletions[i - k - 1])]
            active.append(i)
        yield i, ActiveSet(tuple(t[j - 1] for j in active), t[i - 1])
