"""Constraint-generation engines for evaluation and the adversarial bound.

Both loops alternate a scenario master LP (one row per accumulated
solution or pair) with an exact inner solve under the master's scenario.
The master value is a nonincreasing upper bound, the inner values a
nondecreasing lower bound; the loop stops at relative accuracy
``epsilon`` (absolute accuracy when the lower bound is zero, where a
relative gap is undefined), on a wall-clock limit, or on an iteration
cap.  Limits never invalidate the returned bracket.
"""

from __future__ import annotations

import time
from typing import Optional, TextIO

import numpy as np

from . import core_solvers as _core
from .lp_kernel import STATUS_OPTIMAL, LpModel, NumericalFailure, lp_feasible, lp_solve
from .mip_kernel import MIP_OPTIMAL
from .model import Bracket, Instance, LinearConstraint, Scenario, UncertaintyModel

DEFAULT_EPSILON = 0.01
DEFAULT_TIME_LIMIT = 600.0

_BINSEARCH_REL_TOL = 1e-6


class _Deadline:
    def __init__(self, limit_s: Optional[float]):
        self.t0 = time.monotonic()
        self.limit = limit_s

    def elapsed(self) -> float:
        return time.monotonic() - self.t0

    def expired(self) -> bool:
        return self.limit is not None and self.elapsed() >= self.limit

    def remaining(self) -> Optional[float]:
        if self.limit is None:
            return None
        return max(0.0, self.limit - self.elapsed())


def _gap_closed(lb: float, ub: float, epsilon: float) -> bool:
    slack = 1e-9 * (1.0 + abs(ub))
    if lb > 1e-12:
        return ub - lb <= epsilon * lb + slack
    return ub - lb <= epsilon + slack


def heuristic_scenario(unc: UncertaintyModel) -> Scenario:
    """Scenario that spreads the budget uniformly over the cheapest costs.

    Lifts every cost toward a common watermark ``v``: item deviations are
    ``clamp(v - nominal_i, 0, deviation_i)`` and ``v`` is pushed as high
    as the budget (and any extra rows) allow.  Without extra rows the
    watermark is located exactly by walking the sorted breakpoints;
    otherwise a fixed-iteration binary search probes LP feasibility.
    """
    nominal = unc.nominal
    dev = unc.deviation
    top = float(np.max(nominal + dev, initial=0.0))

    if unc.is_interval_budget_only:
        spend = lambda v: float(np.clip(v - nominal, 0.0, dev).sum())
        points = np.unique(np.concatenate([nominal, nominal + dev]))
        v_star = top
        prev_v, prev_g = 0.0, 0.0
        for bp in points:
            g = spend(bp)
            if g > unc.budget:
                slope = (g - prev_g) / (bp - prev_v)
                v_star = prev_v + (unc.budget - prev_g) / slope
                break
            prev_v, prev_g = float(bp), g
        delta = np.clip(v_star - nominal, 0.0, dev)
        return Scenario.from_delta(unc, delta)

    def bounds_at(v: float) -> np.ndarray:
        return np.clip(np.minimum(dev, v - nominal), 0.0, None)

    budget_row = LinearConstraint({i: 1.0 for i in range(unc.n)}, "<=", unc.budget)
    rows = (budget_row,) + unc.extra

    def probe(v: float):
        return lp_feasible(rows, bounds_at(v), dev)

    lo_v, hi_v = 0.0, top
    ok, witness = probe(lo_v)
    if not ok:
        raise NumericalFailure("zero deviation infeasible; model invariant broken")
    tol = _BINSEARCH_REL_TOL * max(top, 1.0)
    steps = max(1, int(np.ceil(np.log2(max(top, tol) / tol))) + 1)
    for _ in range(steps):
        mid = 0.5 * (lo_v + hi_v)
        ok, w = probe(mid)
        if ok:
            lo_v, witness = mid, w
        else:
            hi_v = mid
    return Scenario.from_delta(unc, np.clip(witness, 0.0, dev))


def _scenario_master(
    unc: UncertaintyModel,
    solutions: list[np.ndarray],
    offsets: list[float],
) -> LpModel:
    """max t  s.t.  t <= offset_k + (nominal + delta).y_k, delta in the model."""
    n = unc.n
    rows = []
    for y, off in zip(solutions, offsets):
        coeffs = {0: 1.0}
        for i in np.nonzero(y > 0.5)[0]:
            coeffs[1 + int(i)] = -1.0
        rows.append(LinearConstraint(coeffs, "<=", off + float(unc.nominal @ y)))
    rows.append(LinearConstraint({1 + i: 1.0 for i in range(n)}, "<=", unc.budget))
    for extra in unc.extra:
        rows.append(
            LinearConstraint(
                {1 + i: v for i, v in extra.coeffs.items()}, extra.sense, extra.rhs
            )
        )
    obj = np.zeros(n + 1)
    obj[0] = 1.0
    return LpModel(
        sense="max",
        objective=obj,
        rows=tuple(rows),
        lower=np.concatenate([[-np.inf], np.zeros(n)]),
        upper=np.concatenate([[np.inf], unc.deviation]),
    )


def _solve_master(unc, solutions, offsets) -> tuple[float, Scenario]:
    res = lp_solve(_scenario_master(unc, solutions, offsets))
    if res.status != STATUS_OPTIMAL:
        raise NumericalFailure(f"scenario master ended {res.status}")
    delta = np.clip(res.x[1:], 0.0, unc.deviation)
    return float(res.objective), Scenario.from_delta(unc, delta)


def _trace(stream: Optional[TextIO], it: int, lb: float, ub: float, elapsed: float):
    if stream is not None:
        stream.write(f"{it},{lb!r},{ub!r},{elapsed:.6f}\n")


def eval_solution(
    inst: Instance,
    x: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    time_limit_s: Optional[float] = DEFAULT_TIME_LIMIT,
    c_init: Optional[Scenario] = None,
    max_iterations: Optional[int] = None,
    inner_node_limit: Optional[int] = None,
    inner_gap_target: float = 0.0,
    reuse_repair_hint: bool = True,
    trace: Optional[TextIO] = None,
) -> Bracket:
    """Worst-case evaluation of a fixed first stage, to accuracy ``epsilon``.

    The returned bracket includes the first-stage cost on both sides; its
    witnesses are the last master scenario and the best repair seen.
    ``inner_node_limit``/``inner_gap_target`` budget each incremental
    solve; the bracket stays valid because only proven bounds feed the
    lower side.  ``reuse_repair_hint`` seeds each incremental solve with
    the best repair found so far (faster, but under tight budgets the
    solve may just return the hint and stall the loop early).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    x = np.round(np.asarray(x, dtype=np.float64))
    deadline = _Deadline(time_limit_s)
    unc = inst.uncertainty
    cx = float(inst.first_stage @ x)

    scenario = c_init if c_init is not None else heuristic_scenario(unc)
    inc = _core.solve_incremental(
        inst, x, scenario, time_limit_s=deadline.remaining(),
        node_limit=inner_node_limit, gap_target=inner_gap_target,
    )
    lb = inc.value if inc.status == MIP_OPTIMAL else inc.bound
    best_y = inc.y
    members = [inc.y]
    seen = {tuple(inc.y.astype(int))}
    ub = np.inf
    iters = 0
    status = None
    _trace(trace, iters, cx + lb, np.inf, deadline.elapsed())

    while True:
        if max_iterations is not None and iters >= max_iterations:
            status = "iteration_limit"
            break
        if deadline.expired():
            status = "time_limit"
            break
        t_star, scenario = _solve_master(
            unc, members, [0.0] * len(members)
        )
        ub = min(ub, t_star)
        iters += 1
        _trace(trace, iters, cx + lb, cx + ub, deadline.elapsed())
        if _gap_closed(lb, ub, epsilon):
            status = "converged"
            break
        if deadline.expired():
            status = "time_limit"
            break
        inc = _core.solve_incremental(
            inst, x, scenario, time_limit_s=deadline.remaining(),
            hint=best_y if reuse_repair_hint else None,
            node_limit=inner_node_limit, gap_target=inner_gap_target,
        )
        exact = inc.status == MIP_OPTIMAL
        val = inc.value if exact else inc.bound
        if val > lb:
            lb = val
            best_y = inc.y
        if _gap_closed(lb, ub, epsilon):
            status = "converged"
            break
        key = tuple(inc.y.astype(int))
        if key in seen:
            # a repeated member proves the master exact -- but only when
            # the inner solve itself was exact; otherwise we are stalled
            status = "converged" if exact else "iteration_limit"
            break
        seen.add(key)
        members.append(inc.y)

    return Bracket(
        lb=cx + lb,
        ub=cx + ub,
        status=status,
        iterations=iters,
        elapsed_seconds=deadline.elapsed(),
        witness_scenario=scenario,
        witness_solution=best_y,
    )


def adversarial_lb(
    inst: Instance,
    epsilon: float = DEFAULT_EPSILON,
    time_limit_s: Optional[float] = DEFAULT_TIME_LIMIT,
    max_iterations: Optional[int] = None,
    inner_node_limit: Optional[int] = None,
    inner_gap_target: float = 0.0,
    initial_rec: Optional[_core.RecoverableResult] = None,
    trace: Optional[TextIO] = None,
) -> Bracket:
    """Best scenario-based lower bound on the robust recoverable optimum.

    ``lb`` is always valid (every recoverable value under a realizable
    scenario bounds the optimum from below, and budgeted inner solves
    contribute their proven dual bound); ``ub`` bounds the adversarial
    value itself.  Seeded with the budget-spreading scenario, so the final
    ``lb`` is at least that heuristic bound.  A caller that already solved
    the seed scenario can pass its result to avoid repeating the work.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    deadline = _Deadline(time_limit_s)
    unc = inst.uncertainty

    scenario = heuristic_scenario(unc)
    rec = initial_rec
    if rec is None:
        rec = _core.solve_recoverable(
            inst, scenario, time_limit_s=deadline.remaining(),
            node_limit=inner_node_limit, gap_target=inner_gap_target,
        )
    lb = rec.value if rec.status == MIP_OPTIMAL else rec.bound
    best_pair = rec.pair
    pairs = [rec.pair]
    seen = {
        (tuple(rec.pair.x.astype(int)), tuple(rec.pair.y.astype(int)))
    }
    ub = np.inf
    iters = 0
    status = None
    _trace(trace, iters, lb, np.inf, deadline.elapsed())

    while True:
        if max_iterations is not None and iters >= max_iterations:
            status = "iteration_limit"
            break
        if deadline.expired():
            status = "time_limit"
            break
        t_star, scenario = _solve_master(
            unc,
            [p.y for p in pairs],
            [float(inst.first_stage @ p.x) for p in pairs],
        )
        ub = min(ub, t_star)
        iters += 1
        _trace(trace, iters, lb, ub, deadline.elapsed())
        if _gap_closed(lb, ub, epsilon):
            status = "converged"
            break
        if deadline.expired():
            status = "time_limit"
            break
        rec = _core.solve_recoverable(
            inst,
            scenario,
            time_limit_s=deadline.remaining(),
            node_limit=inner_node_limit,
            gap_target=inner_gap_target,
            hint=_core.pair_hint(inst, best_pair.x, best_pair.y),
        )
        exact = rec.status == MIP_OPTIMAL
        val = rec.value if exact else rec.bound
        if val > lb:
            lb = val
            best_pair = rec.pair
        if _gap_closed(lb, ub, epsilon):
            status = "converged"
            break
        key = (tuple(rec.pair.x.astype(int)), tuple(rec.pair.y.astype(int)))
        if key in seen:
            status = "converged" if exact else "iteration_limit"
            break
        seen.add(key)
        pairs.append(rec.pair)

    return Bracket(
        lb=lb,
        ub=ub,
        status=status,
        iterations=iters,
        elapsed_seconds=deadline.elapsed(),
        witness_scenario=scenario,
        witness_solution=best_pair.x,
    )


def lb_heuristic(inst: Instance, time_limit_s: Optional[float] = None) -> float:
    """Recoverable value under the budget-spreading scenario.

    On a solver limit the proven dual bound is returned instead of the
    incumbent value, which keeps the result a valid lower bound.
    """
    scenario = heuristic_scenario(inst.uncertainty)
    rec = _core.solve_recoverable(inst, scenario, time_limit_s=time_limit_s)
    return rec.value if rec.status == MIP_OPTIMAL else rec.bound
