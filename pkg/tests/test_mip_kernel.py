"""Branch and bound vs exhaustive enumeration, plus search invariants."""

import itertools

import numpy as np
import pytest

from robrec.lp_kernel import LpModel
from robrec.mip_kernel import MipModel, mip_solve
from robrec.model import LinearConstraint as LC


def binary_model(c, rows, n):
    return MipModel(
        LpModel("min", np.asarray(c, float), tuple(rows), np.zeros(n), np.ones(n)),
        tuple(range(n)),
    )


def enumeration_optimum(c, rows, n):
    best = np.inf
    for code in range(1 << n):
        x = np.array([(code >> (n - 1 - j)) & 1 for j in range(n)], dtype=float)
        if all(r.satisfied(x, 1e-9) for r in rows):
            best = min(best, float(np.asarray(c) @ x))
    return best


def random_binary_mip(rng, n_max=12):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, 6))
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    senses = [str(s) for s in rng.choice(["<=", ">=", "="], m, p=[0.45, 0.45, 0.1])]
    x0 = rng.integers(0, 2, n).astype(float)
    b = A @ x0  # feasible by construction
    c = rng.integers(-10, 11, n).astype(float)
    rows = tuple(
        LC({j: A[i, j] for j in range(n) if A[i, j]}, senses[i], b[i]) for i in range(m)
    )
    return c, rows, n


def test_min_knapsack_example():
    rows = [LC({0: 2, 1: 2, 2: 2}, ">=", 4.0)]
    res = mip_solve(binary_model([1, 2, 3], rows, 3))
    assert res.status == "optimal"
    assert res.value == pytest.approx(3.0)
    assert np.array_equal(res.x, [1, 1, 0])


def test_contradictory_fixings_infeasible():
    rows = [LC({0: 1}, ">=", 1.0), LC({0: 1}, "<=", 0.0)]
    assert mip_solve(binary_model([0.0], rows, 1)).status == "infeasible"


def test_integral_relaxation_solved_at_root():
    rng = np.random.default_rng(7)
    m = 3
    C = rng.integers(1, 21, (m, m)).astype(float)
    rows = [LC({i * m + j: 1.0 for j in range(m)}, "=", 1.0) for i in range(m)]
    rows += [LC({i * m + j: 1.0 for i in range(m)}, "=", 1.0) for j in range(m)]
    res = mip_solve(binary_model(C.ravel(), rows, m * m))
    ref = min(
        sum(C[i, p[i]] for i in range(m)) for p in itertools.permutations(range(m))
    )
    assert res.status == "optimal"
    assert res.value == pytest.approx(ref)
    assert res.nodes == 1


def test_random_mips_match_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(150):
        c, rows, n = random_binary_mip(rng)
        res = mip_solve(binary_model(c, rows, n))
        ref = enumeration_optimum(c, rows, n)
        if np.isinf(ref):
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal"
            assert res.value == ref  # integer data: exact


def test_bounds_monotone_and_incumbent_improves():
    rows = [
        LC({j: 1.0 for j in range(8)}, ">=", 3.0),
        LC({0: 2, 3: 1, 5: 2}, "<=", 3.0),
    ]
    trace = []
    res = mip_solve(
        binary_model([3, -2, 5, -1, 4, -3, 2, 1], rows, 8),
        on_node=lambda bound, inc, nodes: trace.append((bound, inc)),
    )
    assert res.status == "optimal"
    bounds = [t[0] for t in trace]
    assert all(b1 <= b2 + 1e-9 for b1, b2 in zip(bounds, bounds[1:]))
    incs = [t[1] for t in trace if t[1] is not None]
    assert all(i1 >= i2 - 1e-9 for i1, i2 in zip(incs, incs[1:]))


def test_limit_sandwiches_optimum():
    rng = np.random.default_rng(3)
    for _ in range(40):
        c, rows, n = random_binary_mip(rng, n_max=10)
        ref = enumeration_optimum(c, rows, n)
        if np.isinf(ref):
            continue
        res = mip_solve(binary_model(c, rows, n), node_limit=3)
        assert res.best_bound <= ref + 1e-9
        if res.value is not None:
            assert res.value >= ref - 1e-9


def test_incumbent_hint_is_used_and_validated():
    rows = [LC({0: 2, 1: 2, 2: 2}, ">=", 4.0)]
    model = binary_model([1, 2, 3], rows, 3)
    res = mip_solve(model, incumbent_hint=[1, 1, 0], node_limit=0)
    assert res.status == "feasible_gap"
    assert res.value == pytest.approx(3.0)
    # infeasible hint is ignored
    res = mip_solve(model, incumbent_hint=[1, 0, 0], node_limit=0)
    assert res.status == "time_limit_no_incumbent"


def test_max_sense():
    rows = [LC({0: 1, 1: 1}, "<=", 1.0)]
    model = MipModel(
        LpModel("max", np.array([2.0, 3.0]), tuple(rows), np.zeros(2), np.ones(2)),
        (0, 1),
    )
    res = mip_solve(model)
    assert res.value == pytest.approx(3.0)
    assert np.array_equal(res.x, [0, 1])


def test_gap_target_stops_early():
    rng = np.random.default_rng(101)
    c, rows, n = random_binary_mip(rng, n_max=12)
    ref = enumeration_optimum(c, rows, n)
    res = mip_solve(binary_model(c, rows, n), gap_target=0.5)
    if res.status == "feasible_gap":
        assert res.gap <= 0.5 + 1e-12
    assert res.best_bound <= ref + 1e-9
    if res.value is not None:
        assert res.value >= ref - 1e-9


def test_singleton_row_tightening():
    # 2 x0 <= 1 forces the binary to zero at the root
    rows = [LC({0: 2}, "<=", 1.0), LC({0: 1, 1: 1}, ">=", 1.0)]
    res = mip_solve(binary_model([5.0, 1.0], rows, 2))
    assert res.status == "optimal"
    assert np.array_equal(res.x, [0, 1])
    assert res.nodes == 1
