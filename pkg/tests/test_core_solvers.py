"""Incremental/recoverable solves vs pair enumeration; closed-form adversary."""

import numpy as np
import pytest

from conftest import corpus, random_small_instance
from robrec import core_solvers as cs
from robrec import oracle
from robrec.model import Instance, UncertaintyModel, overlap_floor
from robrec.problems import build_min_knapsack, build_selection


def brute_incremental(inst, x, costs):
    X = oracle.enumerate_feasible(inst.feasible)
    from robrec.model import drop_threshold

    chosen = int(round(float(np.asarray(x).sum())))
    thr = drop_threshold(chosen, inst.alpha)
    best = np.inf
    for y in X:
        dropped = chosen - int(round(float(np.asarray(x) @ y)))
        if dropped <= thr:
            best = min(best, float(np.asarray(costs) @ y))
    return best


def test_neighborhood_rows_equal_cardinality(toy3):
    rows, aux = cs.neighborhood_rows(toy3.feasible, 0.5, x_fixed=np.array([1.0, 1, 0]))
    assert aux == 0
    assert len(rows) == 1
    assert rows[0].coeffs == {0: 1.0, 1: 1.0}
    assert rows[0].sense == ">=" and rows[0].rhs == 1.0  # floor ceil(2*0.5)


def test_neighborhood_rows_alpha_edges(toy3):
    # alpha=1: the kept floor is zero, the row is vacuous
    rows, _ = cs.neighborhood_rows(toy3.feasible, 1.0, x_fixed=np.array([1.0, 1, 0]))
    assert rows[0].rhs == 0.0
    # alpha=0 with equal cardinality m pins y to x among feasible points
    rows, _ = cs.neighborhood_rows(toy3.feasible, 0.0, x_fixed=np.array([1.0, 1, 0]))
    assert rows[0].rhs == 2.0
    inc = cs.solve_incremental(
        Instance(toy3.feasible, toy3.first_stage, toy3.uncertainty, 0.0),
        np.array([1.0, 1, 0]),
        toy3.uncertainty.nominal,
    )
    assert np.array_equal(inc.y, [1, 1, 0])


def test_neighborhood_rows_variable_stage_counts(toy3, knap3):
    rows, aux = cs.neighborhood_rows(
        toy3.feasible, 0.5, x_offset=0, y_offset=3, z_offset=6
    )
    assert aux == 3
    assert len(rows) == 2 * 3 + 1  # two link rows per item plus the floor row
    rows, aux = cs.neighborhood_rows(
        knap3.feasible, 0.5, x_offset=0, y_offset=3, z_offset=6
    )
    # exclusion form: two link rows, the drop-count row, and one lower
    # product row per item
    assert len(rows) == 2 * 3 + 1 + 3


def test_incremental_examples(toy3):
    x = np.array([1.0, 1, 0])
    inc = cs.solve_incremental(toy3, x, toy3.uncertainty.nominal)
    assert inc.value == pytest.approx(3.0)
    assert np.array_equal(inc.y, [1, 1, 0])

    knap = Instance(
        feasible=build_min_knapsack([2.0, 2, 2], 4.0),
        first_stage=[0.0, 0, 0],
        uncertainty=UncertaintyModel(nominal=[5.0, 5, 1], deviation=[0.0] * 3, budget=0.0),
        alpha=0.5,
    )
    inc = cs.solve_incremental(knap, x, np.array([5.0, 5, 1]))
    assert inc.value == pytest.approx(6.0)
    assert tuple(inc.y) in {(1, 0, 1), (0, 1, 1)}


def test_recoverable_examples(toy3):
    rec = cs.solve_recoverable(toy3, toy3.uncertainty.nominal)
    assert rec.value == pytest.approx(6.0)
    assert np.array_equal(rec.pair.x, [1, 1, 0]) and np.array_equal(rec.pair.y, [1, 1, 0])

    rec = cs.solve_recoverable(toy3, toy3.uncertainty.peak)
    assert rec.value == pytest.approx(11.0)
    assert np.array_equal(rec.pair.x, [1, 1, 0])
    assert np.array_equal(rec.pair.y, [0, 1, 1])


def test_recoverable_collapses_without_uncertainty(toy3):
    frozen = Instance(
        feasible=toy3.feasible,
        first_stage=toy3.first_stage,
        uncertainty=UncertaintyModel(
            nominal=toy3.uncertainty.nominal, deviation=np.zeros(3), budget=0.0
        ),
        alpha=toy3.alpha,
    )
    rec = cs.solve_recoverable(frozen, frozen.uncertainty.nominal)
    opt, _ = oracle.brute_robrec(frozen)
    assert rec.value == pytest.approx(opt)


def test_solvers_match_enumeration_on_corpus():
    for inst in corpus(seed=21, count=30):
        X = oracle.enumerate_feasible(inst.feasible)
        x = X[0]
        for costs in (inst.uncertainty.nominal, inst.uncertainty.peak):
            inc = cs.solve_incremental(inst, x, costs)
            assert inc.value == brute_incremental(inst, x, costs)
            rec = cs.solve_recoverable(inst, costs)
            ref, _ = oracle.brute_rec(inst, costs)
            assert rec.value == ref
            assert rec.pair.feasible(inst)


def test_recoverable_monotone_in_costs():
    rng = np.random.default_rng(17)
    for _ in range(20):
        inst = random_small_instance(rng)
        base = rng.integers(0, 8, inst.n).astype(float)
        bump = base + rng.integers(0, 4, inst.n).astype(float)
        lo = cs.solve_recoverable(inst, base).value
        hi = cs.solve_recoverable(inst, bump).value
        assert lo <= hi + 1e-9


def test_closed_form_adversary_matches_lp(toy3):
    y = np.array([1.0, 1, 0])
    assert cs.max_scenario_value_u0(y, toy3.uncertainty) == pytest.approx(6.0)
    assert cs.max_scenario_value_u0(np.zeros(3), toy3.uncertainty) == 0.0
    g0 = UncertaintyModel(nominal=toy3.uncertainty.nominal, deviation=[3.0, 3, 0], budget=0.0)
    assert cs.max_scenario_value_u0(y, g0) == pytest.approx(3.0)

    rng = np.random.default_rng(8)
    for _ in range(120):
        n = int(rng.integers(1, 8))
        unc = UncertaintyModel(
            nominal=rng.integers(0, 11, n).astype(float),
            deviation=rng.integers(0, 9, n).astype(float),
            budget=float(rng.integers(0, 18)),
        )
        y = rng.integers(0, 2, n).astype(float)
        closed = cs.max_scenario_value_u0(y, unc)
        lp_value, _ = oracle._adversary_value(unc, [y], [0.0])
        assert closed == pytest.approx(lp_value, abs=1e-6)


def test_closed_form_refuses_extra_rows(toy3):
    from robrec.model import LinearConstraint

    unc = UncertaintyModel(
        nominal=toy3.uncertainty.nominal,
        deviation=toy3.uncertainty.deviation,
        budget=3.0,
        extra=(LinearConstraint({0: 1.0}, "<=", 1.0),),
    )
    with pytest.raises(ValueError):
        cs.max_scenario_value_u0(np.array([1.0, 1, 0]), unc)


def test_reduction_matches_incremental(toy3):
    x = np.array([1.0, 1, 0])
    direct = cs.solve_incremental(toy3, x, toy3.uncertainty.nominal).value
    via = cs.incremental_via_rec_reduction(toy3, x, toy3.uncertainty.nominal)
    assert via == pytest.approx(direct)
    assert via == pytest.approx(3.0)


def test_reduction_matches_on_equal_cardinality_corpus():
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 25:
        fam = ("selection", "assignment")[checked % 2]
        inst = random_small_instance(rng, family=fam)
        X = oracle.enumerate_feasible(inst.feasible)
        x = X[int(rng.integers(len(X)))]
        costs = rng.integers(0, 9, inst.n).astype(float)
        direct = cs.solve_incremental(inst, x, costs).value
        via = cs.incremental_via_rec_reduction(inst, x, costs)
        assert via == pytest.approx(direct, abs=1e-9)
        checked += 1
