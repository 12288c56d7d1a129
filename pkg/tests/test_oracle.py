"""Ground-truth module: enumeration, exact evaluation, vertex adversary."""

import numpy as np
import pytest

from conftest import corpus
from robrec import oracle
from robrec.model import Instance, Scenario, UncertaintyModel
from robrec.problems import build_assignment, build_min_knapsack, build_selection


def test_enumerate_selection_lex_order():
    pts = oracle.enumerate_feasible(build_selection(3, 2))
    assert [tuple(int(v) for v in p) for p in pts] == [
        (0, 1, 1), (1, 0, 1), (1, 1, 0)
    ]


def test_enumerate_counts():
    assert len(oracle.enumerate_feasible(build_assignment(2))) == 2
    assert len(oracle.enumerate_feasible(build_min_knapsack([2.0, 2, 2], 4.0))) == 4


def test_enumeration_guard():
    with pytest.raises(oracle.OracleGuardError):
        oracle.enumerate_feasible(build_selection(21, 2))


def test_brute_eval_toy3(toy3):
    assert oracle.brute_eval(toy3, np.array([1.0, 1, 0])) == pytest.approx(9.0)
    with pytest.raises(ValueError):
        oracle.brute_eval(toy3, np.array([1.0, 1, 1]))


def test_brute_eval_zero_budget(toy3):
    inst = Instance(
        feasible=toy3.feasible,
        first_stage=toy3.first_stage,
        uncertainty=UncertaintyModel(
            nominal=toy3.uncertainty.nominal, deviation=np.zeros(3), budget=0.0
        ),
        alpha=0.5,
    )
    # equals first-stage cost plus the cheapest repair under nominal costs
    assert oracle.brute_eval(inst, np.array([1.0, 1, 0])) == pytest.approx(6.0)


def test_brute_robrec_toy3(toy3):
    opt, x = oracle.brute_robrec(toy3)
    assert opt == pytest.approx(9.0)
    assert np.array_equal(x, [1, 1, 0])
    evals = [oracle.brute_eval(toy3, x) for x in oracle.enumerate_feasible(toy3.feasible)]
    assert sorted(evals) == pytest.approx([9.0, 10.0, 11.0])


def test_counterexample_values(counterexample):
    assert oracle.brute_eval(counterexample, np.array([1.0, 0])) == pytest.approx(0.5)
    opt, _ = oracle.brute_robrec(counterexample)
    assert opt == pytest.approx(0.5)
    assert oracle.extreme_point_value(counterexample) == pytest.approx(0.0)
    verts = {tuple(np.round(v, 9)) for v in
             oracle.delta_polytope_vertices(counterexample.uncertainty)}
    assert verts == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)}


def test_extreme_point_edges(toy3):
    slack = Instance(
        feasible=toy3.feasible,
        first_stage=toy3.first_stage,
        uncertainty=UncertaintyModel(
            nominal=toy3.uncertainty.nominal,
            deviation=toy3.uncertainty.deviation,
            budget=50.0,
        ),
        alpha=0.5,
    )
    # budget never binds: the peak corner is a vertex and dominates
    peak_val, _ = oracle.brute_rec(slack, slack.uncertainty.peak)
    assert oracle.extreme_point_value(slack) == pytest.approx(peak_val)

    single = Instance(
        feasible=build_selection(1, 1),
        first_stage=[0.0],
        uncertainty=UncertaintyModel(nominal=[2.0], deviation=[5.0], budget=3.0),
        alpha=0.0,
    )
    assert oracle.extreme_point_value(single) == pytest.approx(5.0)  # 2 + min(5, 3)


def test_extreme_point_below_true_adversary_on_corpus():
    rng = np.random.default_rng(3)
    from conftest import random_small_instance

    count = 0
    while count < 10:
        inst = random_small_instance(rng, family="selection")
        if inst.n > oracle.VERTEX_GUARD:
            continue
        opt, _ = oracle.brute_robrec(inst)
        assert oracle.extreme_point_value(inst) <= opt + 1e-6 * (1 + abs(opt))
        count += 1


def test_adversary_beats_sampled_scenarios_on_corpus():
    rng = np.random.default_rng(13)
    for inst in corpus(seed=51, count=10):
        X = oracle.enumerate_feasible(inst.feasible)
        x = X[0]
        from robrec import core_solvers as cs

        val = oracle.brute_eval(inst, x)
        cx = float(inst.first_stage @ x)
        unc = inst.uncertainty
        for _ in range(60):
            raw = rng.uniform(0, 1, inst.n) * unc.deviation
            total = raw.sum()
            if total > unc.budget and total > 0:
                raw *= unc.budget / total
            scenario = Scenario.from_delta(unc, raw)
            assert scenario.in_model(unc)
            inc = cs.solve_incremental(inst, x, scenario)
            assert val >= cx + inc.value - 1e-6 * (1 + abs(val))


def test_optimum_below_every_evaluation(toy3):
    opt, _ = oracle.brute_robrec(toy3)
    for x in oracle.enumerate_feasible(toy3.feasible):
        assert opt <= oracle.brute_eval(toy3, x) + 1e-9
