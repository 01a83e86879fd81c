import math

import pytest

from online_checkpointing.algorithms import doubling_cyclic, make_binary, make_linear, make_simple
from online_checkpointing.bounds import (
    LOWER_LIMIT,
    binary_upper,
    bounds_for,
    linear_constant,
    linear_upper_finite,
)
from online_checkpointing.core import perf_cyclic


def test_binary_upper_at_1024():
    assert bounds_for(1024).binary_upper == pytest.approx(math.log(4) + 0.05 / 8, abs=1e-15)
    assert bounds_for(1024).binary_upper == pytest.approx(1.392544, abs=1e-6)


def test_limits():
    assert LOWER_LIMIT == pytest.approx(1.30685, abs=1e-5)
    assert linear_constant() == pytest.approx(1.586, abs=1e-3)


def test_trivial_lower():
    assert bounds_for(3).trivial_lower == pytest.approx(4 / 3)


def test_binary_upper_domain():
    assert binary_upper(4) is None
    assert binary_upper(12) is None
    assert bounds_for(3).binary_upper is None


def test_binary_upper_decreasing():
    vals = [binary_upper(2**e) for e in range(3, 16)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_bounds_for_invalid():
    with pytest.raises(ValueError):
        bounds_for(0)


@pytest.mark.parametrize(
    "alg",
    [make_simple(), make_linear(2), make_linear(10), make_linear(1000), make_binary(8),
     make_binary(1024), doubling_cyclic(1), doubling_cyclic(7)],
    ids=lambda a: f"{a.name}-{a.k}",
)
def test_measured_between_trivial_bounds(alg):
    b = bounds_for(alg.k)
    q = perf_cyclic(alg)
    assert b.trivial_lower - 1e-9 <= q <= b.global_upper + 1e-9


@pytest.mark.parametrize("k", [2, 10, 100, 1000])
def test_linear_finite_bound_holds(k):
    assert perf_cyclic(make_linear(k)) <= linear_upper_finite(k) + 1e-9


def test_rows_and_dict():
    b = bounds_for(16)
    assert [r[0] for r in b.rows()][0] == "trivial_lower"
    assert b.to_dict()["k"] == 16
