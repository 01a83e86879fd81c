import math

import numpy as np
import pytest

from online_checkpointing.algorithms import PHI, make_binary, make_linear, make_simple
from online_checkpointing.core import perf_cyclic
from online_checkpointing.lp import (
    _feasible,
    _solve_highs,
    build_lp,
    gamma_grid,
    gamma_upper_bound,
    optimize_gamma,
    optimize_lambda,
    pattern_structure,
    solve_feasibility,
)
from online_checkpointing.simplex import FEASIBLE, INFEASIBLE, phase_one


def test_constraint_counts():
    lp = build_lp(3, (1, 2), 1.6, 1.6)
    assert lp.constraint_counts() == {
        "variables": 5, "ordering": 4, "scaling": 3, "discrepancy": 9, "total": 16,
    }


def test_build_lp_validation():
    with pytest.raises(ValueError):
        build_lp(3, (1,), 1.0, 1.5)
    with pytest.raises(ValueError):
        build_lp(3, (1,), 1.6, 0.0)
    with pytest.raises(ValueError):
        build_lp(3, (4,), 1.6, 1.5)
    build_lp(3, (1,), 1.6, 4.0)  # lam = k + 1 is allowed


def test_simple_positions_satisfy_lp():
    s = make_simple()
    lp = build_lp(3, (1,), PHI, perf_cyclic(s))
    assert lp.max_violation(s.positions) <= 1e-12
    assert not lp.dominated


@pytest.mark.parametrize("alg", [make_linear(6), make_binary(16)], ids=["linear", "binary"])
def test_algorithm_positions_satisfy_their_lp(alg):
    lp = build_lp(alg.k, alg.pattern, alg.gamma, perf_cyclic(alg) + 1e-12)
    assert lp.max_violation(alg.positions) <= 1e-9
    assert solve_feasibility(lp).feasible


def test_linear_pattern_is_dominated():
    assert build_lp(4, (1, 2, 3, 4), 2.0, 1.6).dominated


def test_simple_at_golden_ratio():
    res = optimize_lambda(3, (1,), PHI, eps=1e-9)
    assert res.feasible
    assert res.lam == pytest.approx(4 / PHI**2, abs=2e-9)
    assert res.perf <= res.lam + 1e-9
    # the Simple algorithm is tight against the scaling bound
    assert gamma_upper_bound(3, 4 / PHI**2, 1) == pytest.approx(PHI, abs=1e-9)


def test_simple_lp_is_infeasible_below_optimum():
    lp = build_lp(3, (1,), PHI, 4 / PHI**2 - 1e-4)
    assert not solve_feasibility(lp).feasible


def test_feasibility_monotone_in_lambda():
    st = pattern_structure(4, (2, 1))
    for g in (1.3, 1.6, 1.9):
        flags = [_feasible(st, g, lam) is not None for lam in np.linspace(1.0, 2.0, 21)]
        # once feasible, feasible for every larger lam
        assert flags == sorted(flags)


def test_dense_and_highs_agree():
    rng = np.random.default_rng(11)
    for _ in range(40):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 6))
        pattern = tuple(int(x) for x in rng.integers(1, k, size=n - 1)) + (1,)
        g = float(rng.uniform(1.05, 2.5))
        lam = float(rng.uniform(1.0, 2.0))
        st = pattern_structure(k, pattern)
        a = _feasible(st, g, lam, backend="simplex") is not None
        b = _feasible(st, g, lam, backend="highs") is not None
        if a != b:
            # disagreement is only acceptable right at the boundary
            lo = _feasible(st, g, lam - 1e-6, backend="simplex") is not None
            hi = _feasible(st, g, lam + 1e-6, backend="simplex") is not None
            assert lo != hi


def test_phase_one_random_systems():
    from scipy.optimize import linprog

    rng = np.random.default_rng(5)
    for _ in range(100):
        m, nv = int(rng.integers(2, 10)), int(rng.integers(1, 6))
        A = rng.normal(size=(m, nv))
        b = rng.normal(size=m)
        status, y = phase_one(A, b, 1e-12)
        ref = linprog(np.zeros(nv), A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        assert (status == FEASIBLE) == (ref.status == 0)
        if status == FEASIBLE:
            assert np.all(A @ y <= b + 1e-9) and np.all(y >= 0)
        else:
            assert status == INFEASIBLE


def test_reduced_rows_equal_full_system():
    # a point satisfying the reduced rows satisfies every discrepancy row
    rng = np.random.default_rng(2)
    for _ in range(30):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 7))
        pattern = tuple(int(x) for x in rng.integers(1, k, size=n - 1)) + (1,)
        lam = 1.8
        g = gamma_upper_bound(k, lam, n) ** 0.5
        lp = build_lp(k, pattern, g, lam)
        res = solve_feasibility(lp, backend="simplex")
        if res.feasible:
            assert lp.max_violation(res.positions) <= 1e-9
            v = lp.violations(res.positions)
            assert set(v) == {"ordering", "scaling", "discrepancy", "normalization"}


def test_reduced_row_count_is_smaller():
    st = pattern_structure(10, tuple([3] * 9 + [1]))
    lp = build_lp(10, st.pattern, 1.5, 1.5)
    assert st.n_rows < lp.n_ordering + lp.n_discrepancy


def test_gamma_upper_bound():
    assert gamma_upper_bound(3, 2.0, 1) == 2.0
    with pytest.raises(ValueError):
        gamma_upper_bound(3, 4.0, 1)


def test_gamma_grid():
    g = gamma_grid(1.0, 1.01, 1e-3)
    assert len(g) == 10 and g[0] == pytest.approx(1.001) and g[-1] == pytest.approx(1.01)
    assert gamma_grid(1.0, 1.0005, 1e-3) == [1.0005]
    with pytest.raises(ValueError):
        gamma_grid(1.0, 1.0, 1e-3)


@pytest.mark.parametrize("k,pattern", [(3, (1,)), (4, (2, 1)), (5, (3, 1, 1)), (2, (1,))])
def test_optimize_gamma_result_is_valid(k, pattern):
    res = optimize_gamma(k, pattern, gamma_step=1e-2, eps=1e-6)
    assert res.feasible
    assert res.perf <= res.lam + 1e-6
    assert res.perf >= 1 + 1 / k - 1e-9
    assert res.gamma <= gamma_upper_bound(k, res.lam, len(pattern)) + 1e-9
    assert res.counts["total"] == (k + len(pattern) - 1) + k + k * (len(pattern) + 1)
    d = res.to_dict()
    assert d["pattern"] == list(pattern) and len(d["positions"]) == k + len(pattern)


def test_simple_gamma_scan_finds_golden_ratio():
    res = optimize_gamma(3, (1,), gamma_step=1e-3, eps=1e-6)
    assert res.lam == pytest.approx(4 / PHI**2, abs=2e-4)
    assert res.gamma == pytest.approx(PHI, abs=2e-3)


def test_cutoff_reports_infeasible():
    res = optimize_gamma(3, (1,), gamma_step=1e-2, cutoff=1.4)
    assert not res.feasible and res.positions is None


def test_solve_highs_infeasible_returns_none():
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])
    assert _solve_highs(A, b, 1, 1e-9) is None


def test_large_pattern_uses_sparse_path():
    alg = make_binary(256)
    st = pattern_structure(alg.k, alg.pattern)
    y = _feasible(st, alg.gamma, perf_cyclic(alg) + 1e-7)
    assert y is not None
    t = st.positions(alg.gamma, y)
    assert np.all(np.diff(t) >= 0)
    assert t[alg.k - 1] == 1.0 and t[-1] == alg.gamma


def test_lambda_k_plus_one_is_feasible():
    assert solve_feasibility(build_lp(2, (1,), 2.0, 3.0)).feasible


def test_smuggled_gamma_below_one_is_infeasible():
    lp = build_lp(3, (1,), 0.5, 1.9, validate=False)
    assert not solve_feasibility(lp).feasible


def test_simple_lp_positions():
    res = solve_feasibility(build_lp(3, (1,), PHI, 4 / PHI**2 + 1e-12))
    np.testing.assert_allclose(res.positions, (PHI**-2, 1 / PHI, 1.0, PHI), atol=1e-9)


def test_random_feasible_instances_substitute():
    rng = np.random.default_rng(8)
    for _ in range(30):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 5))
        pattern = tuple(int(x) for x in rng.integers(1, k + 1, size=n))
        g = float(rng.uniform(1.01, gamma_upper_bound(k, 2.0, n)))
        lp = build_lp(k, pattern, g, 2.0)
        res = solve_feasibility(lp)
        if res.feasible:
            assert lp.max_violation(res.positions) <= 1e-9


def test_bisection_solve_count():
    res = optimize_lambda(3, (1,), PHI, eps=1.0)
    assert res.solves <= 2
    res = optimize_lambda(3, (1,), PHI, eps=1e-6)
    assert res.solves <= 1 + math.ceil(math.log2(1 / 1e-6))


def test_infeasible_at_two():
    res = optimize_lambda(3, (1,), 3.0)
    assert not res.feasible and res.lam is None


def test_gamma_bound_examples():
    assert gamma_upper_bound(5, 2.0, 6) == pytest.approx(11.390625, rel=1e-15)
    assert gamma_upper_bound(5, 1e-12, 3) == pytest.approx(1.0)


def test_degenerate_gamma_scan():
    res = optimize_gamma(3, (1,), gamma_step=100.0)
    assert res.gamma_evaluations >= 1
    assert res.feasible


def test_k4_best_pattern():
    res = optimize_gamma(4, (3, 1), gamma_step=1e-3)
    assert res.lam <= 1.541 + 1e-3
