"""Closed-form reference bounds on the optimal max-distance discrepancy."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .algorithms import LINEAR_ALPHA, is_power_of_two

GLOBAL_UPPER = 2.0
LOWER_LIMIT = 2 - math.log(2)


def linear_constant(alpha: float = LINEAR_ALPHA) -> float:
    """Limit of the Linear deletion-interval bound, ``2**a * (1 - 1/a)**(a - 1)``."""
    return 2**alpha * (1 - 1 / alpha) ** (alpha - 1)


def linear_upper_finite(k: int, alpha: float = LINEAR_ALPHA) -> float:
    """Non-asymptotic Linear bound: insertion intervals stay below ``alpha``,
    deletion intervals below ``(1 + 1/k)`` times :func:`linear_constant`."""
    return max(alpha, (1 + 1 / k) * linear_constant(alpha))


def binary_upper(k: int) -> Optional[float]:
    """``ln 4 + 0.05 / lg(k/4)`` without the O(1/k) term; None unless k is a power of two >= 8."""
    if not is_power_of_two(k) or k < 8:
        return None
    return math.log(4) + 0.05 / math.log2(k / 4)


@dataclass(frozen=True)
class BoundSet:
    k: int
    lower: float
    linear_upper: float
    linear_upper_finite: float
    binary_upper: Optional[float]
    trivial_lower: float
    global_upper: float = GLOBAL_UPPER

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self) -> list[tuple[str, Optional[float], str]]:
        return [
            ("trivial_lower", self.trivial_lower, "1 + 1/k, holds for every k"),
            ("lower", self.lower, "2 - ln 2, asymptotic (minus O(1/k))"),
            ("binary_upper", self.binary_upper, "ln 4 + 0.05/lg(k/4) + O(1/k), k power of two >= 8"),
            ("linear_upper", self.linear_upper, "Linear algorithm, plus O(1/k)"),
            ("linear_upper_finite", self.linear_upper_finite, "Linear algorithm, exact for this k"),
            ("global_upper", self.global_upper, "doubling baseline"),
        ]


def bounds_for(k: int) -> BoundSet:
    if k < 1:
        raise ValueError("k must be positive")
    return BoundSet(
        k=k,
        lower=LOWER_LIMIT,
        linear_upper=linear_constant(),
        linear_upper_finite=linear_upper_finite(k),
        binary_upper=binary_upper(k),
        trivial_lower=1 + 1 / k,
    )
