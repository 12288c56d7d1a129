"""Simplex kernel: examples, duality, vertex-enumeration agreement, parity."""

import itertools

import numpy as np
import pytest

from robrec import lp_kernel as lp
from robrec.model import LinearConstraint as LC


def make_model(sense, c, rows, lo, up):
    return lp.LpModel(sense, np.asarray(c, float), tuple(rows),
                      np.asarray(lo, float), np.asarray(up, float))


def random_feasible_lp(rng, n_max=9, m_max=6):
    """Boxed LP built around a known interior point: feasible and bounded."""
    n = int(rng.integers(1, n_max))
    m = int(rng.integers(0, m_max))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    x0 = rng.uniform(0, 2, n)
    senses = [str(s) for s in rng.choice(["<=", "=", ">="], m)]
    b = A @ x0
    for i in range(m):
        if senses[i] == "<=":
            b[i] += rng.uniform(0, 2)
        elif senses[i] == ">=":
            b[i] -= rng.uniform(0, 2)
    rows = tuple(LC({j: A[i, j] for j in range(n)}, senses[i], b[i]) for i in range(m))
    c = rng.uniform(-5, 5, n)
    return make_model("min", c, rows, np.zeros(n), np.full(n, 3.0))


def test_simple_cover_lp():
    model = make_model("min", [1, 1], [LC({0: 1, 1: 1}, ">=", 1.0)], [0, 0], [1, 1])
    res = lp.lp_solve(model)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0, abs=1e-9)


def test_infeasible_box():
    model = make_model("min", [1.0], [LC({0: 1}, ">=", 2.0)], [0], [1])
    assert lp.lp_solve(model).status == "infeasible"


def test_unbounded():
    model = make_model("max", [1.0], [], [-np.inf], [np.inf])
    assert lp.lp_solve(model).status == "unbounded"


def test_scenario_master_shape():
    # max t with two cover rows and a budget row: the balanced split wins
    rows = [
        LC({0: 1, 1: -1}, "<=", 0.0),
        LC({0: 1, 2: -1}, "<=", 0.0),
        LC({1: 1, 2: 1}, "<=", 1.0),
    ]
    model = make_model("max", [1, 0, 0], rows, [-np.inf, 0, 0], [np.inf, 1, 1])
    res = lp.lp_solve(model)
    assert res.objective == pytest.approx(0.5, abs=1e-9)
    # hand dual: both cover rows at weight 1/2, budget row at 1/2
    assert res.duals == pytest.approx([0.5, 0.5, 0.5], abs=1e-7)


def test_lp_feasible_examples():
    rows = [LC({0: 1, 1: 1, 2: 1}, "<=", 3.0)]
    ok, witness = lp.lp_feasible(rows, [1, 2, 0], [3, 3, 0])
    assert ok
    assert witness == pytest.approx([1, 2, 0])
    ok, witness = lp.lp_feasible(rows, [3, 3, 0], [3, 3, 0])
    assert not ok and witness is None
    ok, witness = lp.lp_feasible([], [1, 2, 0], [3, 3, 0])
    assert ok and witness == pytest.approx([1, 2, 0])


def test_strong_duality_random():
    rng = np.random.default_rng(5)
    for _ in range(250):
        model = random_feasible_lp(rng)
        res = lp.lp_solve(model)
        assert res.status == "optimal"
        gap = abs(res.objective - lp.dual_objective(model, res))
        assert gap <= 1e-6 * (1 + abs(res.objective))
        for row in model.rows:
            assert row.satisfied(res.x, 1e-7 * (1 + abs(row.rhs)))


def test_dual_signs_follow_senses():
    rng = np.random.default_rng(6)
    for _ in range(100):
        model = random_feasible_lp(rng)
        res = lp.lp_solve(model)
        for row, y in zip(model.rows, res.duals):
            if row.sense == "<=":
                assert y <= 1e-7
            elif row.sense == ">=":
                assert y >= -1e-7


def vertex_enumeration_optimum(model):
    """Independent oracle: test all candidate active sets of size n."""
    n = model.n
    planes = []
    for row in model.rows:
        planes.append((row.dense(n), row.rhs))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, model.lower[j]))
        planes.append((e.copy(), model.upper[j]))
    best = np.inf
    for combo in itertools.combinations(range(len(planes)), n):
        M = np.array([planes[k][0] for k in combo])
        r = np.array([planes[k][1] for k in combo])
        try:
            x = np.linalg.solve(M, r)
        except np.linalg.LinAlgError:
            continue
        if np.any(x < model.lower - 1e-8) or np.any(x > model.upper + 1e-8):
            continue
        if all(row.satisfied(x, 1e-8) for row in model.rows):
            best = min(best, float(model.objective @ x))
    return best


def test_agrees_with_vertex_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(60):
        model = random_feasible_lp(rng, n_max=6, m_max=6)
        res = lp.lp_solve(model)
        ref = vertex_enumeration_optimum(model)
        assert res.status == "optimal"
        assert res.objective == pytest.approx(ref, abs=1e-6)


def test_resolve_bit_identical():
    model = make_model(
        "min",
        [1.0, -2.0, 0.5],
        [LC({0: 1, 1: 1, 2: 1}, "<=", 2.0), LC({0: 1, 1: -1}, ">=", -1.0)],
        [0, 0, 0],
        [1, 1, 1],
    )
    first = lp.lp_solve(model)
    for _ in range(3):
        again = lp.lp_solve(model)
        assert np.array_equal(first.x, again.x)
        assert first.objective == again.objective
        assert first.pivots == again.pivots


def test_degenerate_cover_terminates():
    n = 6
    rows = [LC({j: 1.0 for j in range(n)}, ">=", 3.0) for _ in range(8)]
    model = make_model("min", np.ones(n), rows, np.zeros(n), np.ones(n))
    res = lp.lp_solve(model)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.0, abs=1e-9)


def test_backend_parity_when_compiled():
    """Both pivot kernels must agree pivot-for-pivot."""
    try:
        from robrec import _simplex_cy
    except ImportError:
        pytest.skip("compiled kernel not built")
    from robrec import _kernel, _simplex_py

    rng = np.random.default_rng(9)
    orig = _kernel.simplex_run
    try:
        for _ in range(60):
            model = random_feasible_lp(rng)
            _kernel.simplex_run = _simplex_py.simplex_run
            a = lp.lp_solve(model)
            _kernel.simplex_run = _simplex_cy.simplex_run
            b = lp.lp_solve(model)
            assert a.status == b.status
            assert a.pivots == b.pivots
            if a.status == "optimal":
                assert np.array_equal(a.x, b.x)
    finally:
        _kernel.simplex_run = orig
