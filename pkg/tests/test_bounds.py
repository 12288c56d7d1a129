"""Lower/upper bounds, multiplier search, lemma estimates, ratio report."""

import numpy as np
import pytest

from conftest import corpus, random_small_instance
from robrec import bounds as B
from robrec import core_solvers as cs
from robrec import cut_loop as cl
from robrec import oracle
from robrec.model import Instance, UncertaintyModel
from robrec.problems import build_assignment, build_selection


def test_upper_bound_toy3(toy3):
    res = B.upper_bound(toy3)
    assert res.ub == pytest.approx(9.0)  # min(6 + 3, 11)
    assert np.array_equal(res.x_under, [1, 1, 0])
    assert np.array_equal(res.x_over, [1, 1, 0])
    assert not res.partial


def test_upper_bound_budget_edges(toy3):
    frozen = Instance(
        feasible=toy3.feasible, first_stage=toy3.first_stage,
        uncertainty=UncertaintyModel(
            nominal=toy3.uncertainty.nominal, deviation=toy3.uncertainty.deviation,
            budget=0.0),
        alpha=0.5,
    )
    opt, _ = oracle.brute_robrec(frozen)
    assert B.upper_bound(frozen).ub == pytest.approx(opt)

    flat = Instance(
        feasible=toy3.feasible, first_stage=toy3.first_stage,
        uncertainty=UncertaintyModel(
            nominal=toy3.uncertainty.nominal, deviation=np.zeros(3), budget=3.0),
        alpha=0.5,
    )
    rec = cs.solve_recoverable(flat, flat.uncertainty.nominal).value
    assert B.upper_bound(flat).ub == pytest.approx(rec)


def test_lb_selection_toy3(toy3):
    res = B.lb_selection(toy3)
    assert res.exact
    assert res.value <= 9.0 + 1e-9


def test_lb_selection_exact_at_zero_alpha_equal_cardinality():
    rng = np.random.default_rng(61)
    for _ in range(8):
        inst = random_small_instance(rng, family="selection", alpha=0.0)
        opt, _ = oracle.brute_robrec(inst)
        res = B.lb_selection(inst)
        assert res.value == pytest.approx(opt, abs=1e-6 * (1 + abs(opt)))


def test_lb_selection_exact_at_zero_alpha_exclusion_positive_costs():
    rng = np.random.default_rng(67)
    checked = 0
    while checked < 8:
        inst = random_small_instance(rng, family="knapsack", alpha=0.0)
        if np.any(inst.uncertainty.nominal <= 0):
            continue
        opt, _ = oracle.brute_robrec(inst)
        res = B.lb_selection(inst)
        assert res.value == pytest.approx(opt, abs=1e-6 * (1 + abs(opt)))
        checked += 1


def test_lb_selection_collapses_without_uncertainty():
    inst = Instance(
        feasible=build_selection(4, 2),
        first_stage=[3.0, 1, 4, 1],
        uncertainty=UncertaintyModel(
            nominal=[2.0, 7, 1, 8], deviation=np.zeros(4), budget=0.0
        ),
        alpha=0.0,
    )
    rec = cs.solve_recoverable(inst, inst.uncertainty.nominal).value
    assert B.lb_selection(inst).value == pytest.approx(rec)


def test_lagrangian_textbook_example():
    inst = Instance(
        feasible=build_assignment(2),
        first_stage=[1.0, 9, 9, 1],
        uncertainty=UncertaintyModel(
            nominal=[1.0, 9, 9, 1], deviation=np.zeros(4), budget=0.0
        ),
        alpha=0.5,
    )
    assert B.lb_lagrangian(inst, 0.0).value == pytest.approx(4.0)
    rec = cs.solve_recoverable(inst, inst.uncertainty.nominal).value
    opt_res = B.lb_lagrangian_opt(inst)
    assert opt_res.value == pytest.approx(rec, abs=1e-6)


def test_lagrangian_preconditions(knap3, toy3):
    with pytest.raises(ValueError):
        B.lb_lagrangian(knap3, 0.0)  # not equal-cardinality
    with pytest.raises(ValueError):
        B.lb_lagrangian_opt(knap3)
    with pytest.raises(ValueError):
        B.lb_lagrangian(toy3, -1.0)  # negative multiplier


def test_lagrangian_valid_over_mu_grid():
    rng = np.random.default_rng(71)
    for _ in range(6):
        inst = random_small_instance(rng, family="selection")
        opt, _ = oracle.brute_robrec(inst)
        mu_max = float(np.max(inst.uncertainty.peak))
        for mu in np.linspace(0.0, mu_max, 7):
            val = B.lb_lagrangian(inst, float(mu)).value
            assert val <= opt + 1e-6 * (1 + abs(opt))


def test_lagrangian_opt_sandwich(toy3):
    res = B.lb_lagrangian_opt(toy3)
    base = B.lb_lagrangian(toy3, 0.0).value
    assert base - 1e-9 <= res.value <= 9.0 + 1e-6
    mu_max = float(np.max(toy3.uncertainty.peak))
    assert np.isfinite(B.lb_lagrangian(toy3, mu_max).value)


def test_choose_first_stage(toy3, counterexample):
    res = B.choose_first_stage(toy3, epsilon=1e-6)
    assert np.array_equal(res.x, [1, 1, 0])
    assert res.which == "nominal"  # tie prefers the nominal-stage candidate
    assert res.bracket.ub == pytest.approx(9.0, abs=1e-6)

    res = B.choose_first_stage(counterexample, epsilon=1e-6)
    assert res.bracket.ub == pytest.approx(0.5, abs=1e-6)


def test_sandwich_on_corpus():
    for inst in corpus(seed=77, count=15):
        opt, _ = oracle.brute_robrec(inst)
        tol = 1e-6 * (1 + abs(opt))
        assert B.upper_bound(inst).ub >= opt - tol
        assert cl.lb_heuristic(inst) <= opt + tol
        assert B.lb_selection(inst).value <= opt + tol
        if inst.feasible.equal_cardinality is not None and inst.feasible.integral_polytope:
            assert B.lb_lagrangian_opt(inst).value <= opt + tol


def test_lemma_bounds_fields(toy3):
    report = B.ratio_report(toy3, B.ReportConfig(epsilon=1e-6))
    lb = report.lemma_bounds
    assert lb["lemma2_sigma"] == pytest.approx(4.0)  # worst peak/nominal ratio
    assert lb["lemma4_beta"] == pytest.approx(2.0)  # total deviation / budget
    assert lb["lemma5_q"] == pytest.approx(3.0)  # two risky items
    assert lb["lemma3_beta"] == pytest.approx(1.0 + 3.0 / 9.0, abs=1e-6)
    assert report.lemma1_rho == pytest.approx(1.0)
    assert report.rho_c0 == pytest.approx(1.0)
    assert report.min_eval == pytest.approx(9.0, abs=1e-6)
    assert all(r is None or r >= 1 - 1e-6 for r in report.rho_by_method.values())


def test_lemma2_sigma_doubling():
    rng = np.random.default_rng(83)
    inst = random_small_instance(rng, family="selection")
    unc = UncertaintyModel(
        nominal=np.maximum(inst.uncertainty.nominal, 1.0),
        deviation=np.maximum(inst.uncertainty.nominal, 1.0),
        budget=float(np.maximum(inst.uncertainty.nominal, 1.0).sum()),
    )
    doubled = Instance(inst.feasible, inst.first_stage, unc, inst.alpha)
    report = B.ratio_report(doubled, B.ReportConfig(methods=(), lemmas=True))
    assert report.lemma_bounds["lemma2_sigma"] == pytest.approx(2.0)


def test_lemma4_beta_when_budget_covers_deviation(toy3):
    unc = UncertaintyModel(
        nominal=toy3.uncertainty.nominal,
        deviation=toy3.uncertainty.deviation,
        budget=float(toy3.uncertainty.deviation.sum()),
    )
    inst = Instance(toy3.feasible, toy3.first_stage, unc, toy3.alpha)
    report = B.ratio_report(inst, B.ReportConfig(methods=(), lemmas=True))
    assert report.lemma_bounds["lemma4_beta"] == pytest.approx(1.0)


def test_lemma5_equal_cardinality_refinement():
    # all items risky enough: the kept-fraction refinement applies
    inst = Instance(
        feasible=build_selection(4, 2),
        first_stage=[1.0, 2, 3, 4],
        uncertainty=UncertaintyModel(
            nominal=[2.0, 3, 1, 5], deviation=[4.0, 4, 4, 4], budget=8.0
        ),
        alpha=0.5,
    )
    report = B.ratio_report(inst, B.ReportConfig(methods=(), lemmas=True))
    assert report.lemma_bounds["lemma5_q"] == pytest.approx(1.0 + 4 / 2)


def test_ratio_report_serializes(toy3):
    report = B.ratio_report(toy3, B.ReportConfig(epsilon=1e-6))
    doc = report.to_dict()
    assert doc["ub"] == pytest.approx(9.0)
    assert doc["chosen_x"] == [1, 1, 0]
    assert set(doc["lb_by_method"]) == {"heuristic", "adversarial", "selection", "lagrangian"}
    import json

    json.dumps(doc)  # must be JSON-serializable as-is


def test_ratio_report_survives_component_failure(toy3, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("forced failure")

    monkeypatch.setattr(B._loop, "adversarial_lb", boom)
    report = B.ratio_report(toy3, B.ReportConfig(epsilon=1e-6))
    assert "adversarial" in report.errors
    assert report.lb_by_method["adversarial"] is None
    assert report.ub == pytest.approx(9.0)
