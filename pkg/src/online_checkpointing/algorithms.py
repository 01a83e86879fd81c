"""Concrete checkpointing algorithms: Simple, Linear, Binary and the doubling baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import CyclicAlgorithm, Schedule, deletions_to_pattern, unroll

PHI = (1 + math.sqrt(5)) / 2
LINEAR_ALPHA = 1.302

NAMES = ("simple", "linear", "binary", "doubling")


def make_simple() -> CyclicAlgorithm:
    """k = 3, always drop the oldest checkpoint, positions on powers of phi."""
    return CyclicAlgorithm(
        k=3,
        pattern=(1,),
        positions=(PHI**-2, 1 / PHI, 1.0, PHI),
        gamma=PHI,
        name="simple",
    )


def make_linear(k: int, alpha: float = LINEAR_ALPHA) -> CyclicAlgorithm:
    """Positions ``(i/k)**alpha`` for i in [1, 2k], pattern ``(1, 2, ..., k)``.

    One period removes exactly the odd-indexed checkpoints t_1, t_3, ..., t_{2k-1}.
    """
    if k < 2:
        raise ValueError(f"linear needs k >= 2, got {k}")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    positions = [(i / k) ** alpha for i in range(1, 2 * k + 1)]
    positions[k - 1] = 1.0
    gamma = 2.0**alpha
    positions[-1] = gamma
    return CyclicAlgorithm(k, tuple(range(1, k + 1)), tuple(positions), gamma, name="linear")


def is_power_of_two(k: int) -> bool:
    return k >= 1 and k & (k - 1) == 0


def odd_part(m: int) -> int:
    """S(m): m divided by the largest power of two dividing it."""
    if m < 1:
        raise ValueError("odd_part is defined on positive integers")
    return m // (m & -m)


def two_adic(m: int) -> int:
    """e(m): exponent of the largest power of two dividing m."""
    return (m & -m).bit_length() - 1


def binary_alpha(k: int) -> float:
    c = math.log2(math.sqrt(2) / math.log(4))
    return 2.0 ** (1 + c / math.log2(k / 4))


def binary_deletions(k: int) -> tuple[int, ...]:
    """Global indices deleted during the first period: d(k+i) = S(i + k/2)."""
    return tuple(odd_part(i + k // 2) for i in range(1, k // 2 + 1))


def make_binary(k: int) -> CyclicAlgorithm:
    if not is_power_of_two(k) or k < 8:
        raise ValueError(f"binary needs k a power of two with k >= 8, got {k}")
    a = binary_alpha(k)
    half = k // 2
    t = [0.0] * (k + half + 1)  # 1-based
    for i in range(half + 1, k + 1):
        t[i] = a ** (2 * i / k - 2)
    t[k] = 1.0
    for i in range(half, 0, -1):
        t[i] = t[2 * i] / a
    for i in range(1, half + 1):
        t[k + i] = a * t[half + i]
    pattern = deletions_to_pattern(k, binary_deletions(k))
    return CyclicAlgorithm(k, pattern, tuple(t[1:]), a, name="binary")


def make_doubling(k: int, rounds: int = 1) -> Schedule:
    """Folklore discrepancy-2 baseline as an explicit schedule.

    Starts at 1..k; at every even time in (k, 2k] the earliest checkpoint at an
    odd time is replaced, which ends at 2, 4, ..., 2k. Each further round repeats
    this on the doubled configuration.
    """
    if k < 1:
        raise ValueError("doubling needs k >= 1")
    times = list(range(1, k + 1))
    active = list(range(1, k + 1))  # global indices
    deletions = []
    for r in range(rounds):
        unit = 2**r
        for T in range(k + 1, 2 * k + 1):
            if T % 2:
                continue
            victim = next(g for g in active if (times[g - 1] // unit) % 2 == 1)
            active.remove(victim)
            deletions.append(victim)
            times.append(T * unit)
            active.append(len(times))
    return Schedule(k, tuple(float(x) for x in times), tuple(deletions))


def doubling_cyclic(k: int) -> CyclicAlgorithm:
    """One round of the doubling baseline as a normalized cyclic algorithm."""
    sched = make_doubling(k, 1)
    pattern = deletions_to_pattern(k, sched.deletions)
    pos = tuple(t / k for t in sched.times)
    return CyclicAlgorithm(k, pattern, pos, 2.0, name="doubling")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    k: int
    alpha: Optional[float] = None
    periods: int = 1

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {', '.join(NAMES)}")
        if self.name == "simple" and self.k != 3:
            raise ValueError("simple requires k=3")
        if self.name == "binary" and (not is_power_of_two(self.k) or self.k < 8):
            raise ValueError("binary requires k a power of two with k >= 8")
        if self.name == "linear" and self.k < 2:
            raise ValueError("linear requires k >= 2")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.alpha is not None and self.name != "linear":
            raise ValueError("alpha only applies to linear")
        if self.periods < 0:
            raise ValueError("periods must be non-negative")

    @classmethod
    def parse(cls, text: str, periods: int = 1) -> "AlgorithmSpec":
        """Parse strings like ``simple``, ``binary:k=16`` or ``linear:k=100,alpha=1.302``."""
        name, _, rest = text.strip().partition(":")
        name = name.strip().lower()
        opts: dict[str, str] = {}
        for part in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = part.partition("=")
            if not eq:
                raise ValueError(f"malformed option {part!r} in {text!r}")
            opts[key.strip().lower()] = val.strip()
        unknown = set(opts) - {"k", "alpha", "periods"}
        if unknown:
            raise ValueError(f"unknown option(s) {sorted(unknown)} in {text!r}")
        k = int(opts["k"]) if "k" in opts else (3 if name == "simple" else None)
        if k is None:
            raise ValueError(f"{name} needs k=<int>")
        alpha = float(opts["alpha"]) if "alpha" in opts else None
        return cls(name, k, alpha, int(opts.get("periods", periods)))

    def cyclic(self) -> CyclicAlgorithm:
        if self.name == "simple":
            return make_simple()
        if self.name == "linear":
            return make_linear(self.k, LINEAR_ALPHA if self.alpha is None else self.alpha)
        if self.name == "binary":
            return make_binary(self.k)
        return doubling_cyclic(self.k)

    def schedule(self) -> Schedule:
        if self.name == "doubling":
            return make_doubling(self.k, self.periods)
        return unroll(self.cyclic(), self.periods)
