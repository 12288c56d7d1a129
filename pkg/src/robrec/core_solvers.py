"""Incremental and recoverable solves plus the closed-form budget adversary.

The neighborhood of a first-stage solution is encoded directly as linear
rows.  With a fixed first stage the rows involve only the second-stage
variables; with both stages variable, per-item product terms are
linearized with auxiliary variables ``z_i`` (kept continuous for
equal-cardinality problems, where the intersection row alone is exact).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import mip_kernel
from .lp_kernel import LpModel
from .mip_kernel import MIP_INFEASIBLE, MIP_OPTIMAL, MipModel, mip_solve
from .model import (
    FeasibleSetSpec,
    Instance,
    LinearConstraint,
    Scenario,
    SolutionPair,
    overlap_floor,
    rationalize,
)

CostsLike = Union[Scenario, Sequence[float], np.ndarray]


def _costs(c: CostsLike) -> np.ndarray:
    if isinstance(c, Scenario):
        return c.costs
    return np.asarray(c, dtype=np.float64)


@dataclass
class IncrementalResult:
    y: np.ndarray
    value: float
    bound: float
    status: str
    nodes: int


@dataclass
class RecoverableResult:
    pair: SolutionPair
    value: float
    bound: float
    status: str
    nodes: int


def _shift_rows(rows, offset: int):
    return [
        LinearConstraint({i + offset: v for i, v in r.coeffs.items()}, r.sense, r.rhs)
        for r in rows
    ]


def neighborhood_rows(
    spec: FeasibleSetSpec,
    alpha: float,
    x_fixed: Optional[np.ndarray] = None,
    x_offset: int = 0,
    y_offset: int = 0,
    z_offset: Optional[int] = None,
) -> tuple[list[LinearConstraint], int]:
    """Rows encoding the element-exclusion neighborhood.

    With ``x_fixed`` the rows constrain only the ``y`` block (starting at
    ``y_offset``) and no auxiliaries are used.  With ``x`` variable, the
    product terms are linearized through ``n`` auxiliary variables at
    ``z_offset``; the returned count says how many were used.  For
    equal-cardinality problems the kept-element form with floor
    ``ceil(m (1 - alpha))`` is emitted instead of the drop-count form.
    """
    n = spec.n
    afrac = rationalize(alpha)
    m = spec.equal_cardinality
    rows: list[LinearConstraint] = []

    if x_fixed is not None:
        x = np.asarray(x_fixed)
        chosen = [i for i in range(n) if x[i] > 0.5]
        if m is not None:
            rows.append(
                LinearConstraint(
                    {y_offset + i: 1.0 for i in chosen}, ">=",
                    float(overlap_floor(m, alpha)),
                )
            )
        else:
            # sum_i x_i (1 - y_i) <= alpha * sum_i x_i, with x constant
            rhs = float((afrac - 1) * len(chosen))
            rows.append(
                LinearConstraint({y_offset + i: -1.0 for i in chosen}, "<=", rhs)
            )
        return rows, 0

    if z_offset is None:
        raise ValueError("z_offset required when the first stage is variable")

    for i in range(n):
        rows.append(
            LinearConstraint({z_offset + i: 1.0, x_offset + i: -1.0}, "<=", 0.0)
        )
        rows.append(
            LinearConstraint({z_offset + i: 1.0, y_offset + i: -1.0}, "<=", 0.0)
        )
    if m is not None:
        rows.append(
            LinearConstraint(
                {z_offset + i: 1.0 for i in range(n)}, ">=",
                float(overlap_floor(m, alpha)),
            )
        )
    else:
        coeffs = {x_offset + i: float(1 - afrac) for i in range(n)}
        for i in range(n):
            coeffs[z_offset + i] = -1.0
        rows.append(LinearConstraint(coeffs, "<=", 0.0))
        for i in range(n):
            rows.append(
                LinearConstraint(
                    {x_offset + i: 1.0, y_offset + i: 1.0, z_offset + i: -1.0},
                    "<=",
                    1.0,
                )
            )
    return rows, n


def incremental_model(inst: Instance, x: np.ndarray, costs: np.ndarray) -> MipModel:
    n = inst.n
    rows = list(inst.feasible.constraints)
    nb_rows, _ = neighborhood_rows(inst.feasible, inst.alpha, x_fixed=x)
    rows.extend(nb_rows)
    lp = LpModel(
        sense="min",
        objective=costs,
        rows=tuple(rows),
        lower=np.zeros(n),
        upper=np.ones(n),
    )
    return MipModel(lp=lp, binary=tuple(range(n)))


def recoverable_model(inst: Instance, costs: np.ndarray) -> MipModel:
    """Joint model over stacked variables [x, y, z]."""
    n = inst.n
    rows = list(inst.feasible.constraints)
    rows.extend(_shift_rows(inst.feasible.constraints, n))
    nb_rows, _ = neighborhood_rows(
        inst.feasible, inst.alpha, x_offset=0, y_offset=n, z_offset=2 * n
    )
    rows.extend(nb_rows)
    obj = np.concatenate([inst.first_stage, costs, np.zeros(n)])
    lp = LpModel(
        sense="min",
        objective=obj,
        rows=tuple(rows),
        lower=np.zeros(3 * n),
        upper=np.ones(3 * n),
    )
    # the product auxiliaries are pinned to x_i * y_i by their rows whenever
    # x and y are binary, so they never need to be branched on
    return MipModel(lp=lp, binary=tuple(range(2 * n)))


def pair_hint(inst: Instance, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Full [x, y, z] vector for a feasible pair, used to seed pruning."""
    z = np.minimum(np.round(x), np.round(y))
    return np.concatenate([np.round(x), np.round(y), z])


def single_stage_min(
    spec: FeasibleSetSpec, costs: np.ndarray, node_limit: Optional[int] = None
) -> Optional[np.ndarray]:
    """argmin costs.x over the 0-1 feasible set (one plain MIP)."""
    n = spec.n
    model = MipModel(
        lp=LpModel(
            sense="min",
            objective=np.asarray(costs, dtype=np.float64),
            rows=spec.constraints,
            lower=np.zeros(n),
            upper=np.ones(n),
        ),
        binary=tuple(range(n)),
    )
    res = mip_solve(model, node_limit=node_limit)
    return None if res.x is None else np.round(res.x)


_HINT_STAGE_NODES = 3000
_HINT_REPAIR_NODES = 1500


def constructive_pair_hint(inst: Instance, costs: np.ndarray) -> Optional[np.ndarray]:
    """Cheap feasible pair used to seed the recoverable search.

    Tries first stages optimized for the first-stage costs alone and for
    the combined costs, repairs each with a budgeted incremental solve,
    and keeps the better pair.  Quality only: the search stays exact.
    """
    best_hint = None
    best_val = np.inf
    seen: set[tuple] = set()
    for stage_costs in (inst.first_stage, inst.first_stage + costs):
        x = single_stage_min(inst.feasible, stage_costs, node_limit=_HINT_STAGE_NODES)
        if x is None:
            continue
        key = tuple(x.astype(int))
        if key in seen:
            continue
        seen.add(key)
        inc = solve_incremental(inst, x, costs, node_limit=_HINT_REPAIR_NODES)
        val = float(inst.first_stage @ x) + inc.value
        if val < best_val:
            best_val = val
            best_hint = pair_hint(inst, x, inc.y)
    return best_hint


def solve_incremental(
    inst: Instance,
    x: np.ndarray,
    c: CostsLike,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
    hint: Optional[np.ndarray] = None,
    gap_target: float = 0.0,
) -> IncrementalResult:
    """Cheapest repaired solution in the neighborhood of ``x``.

    Never infeasible: ``y = x`` always qualifies, and it is passed as a
    pruning hint.  Under a limit the incumbent and its proven bound are
    returned with the corresponding status.
    """
    costs = _costs(c)
    model = incremental_model(inst, x, costs)
    if hint is None:
        hint = np.round(np.asarray(x, dtype=np.float64))
    res = mip_solve(
        model, time_limit_s=time_limit_s, node_limit=node_limit,
        incumbent_hint=hint, gap_target=gap_target,
    )
    if res.x is None:
        raise RuntimeError(f"incremental solve failed: {res.status}")
    y = np.round(res.x[: inst.n])
    return IncrementalResult(
        y=y, value=float(costs @ y), bound=res.best_bound, status=res.status,
        nodes=res.nodes,
    )


def solve_recoverable(
    inst: Instance,
    c: CostsLike,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
    hint: Optional[np.ndarray] = None,
    auto_hint: bool = True,
    gap_target: float = 0.0,
) -> RecoverableResult:
    """Best feasible pair for fixed second-stage costs.

    Unless a hint is supplied, a constructive pair is built first so the
    search starts with a near-feasible-optimal incumbent; this changes
    nothing about exactness, only pruning.
    """
    costs = _costs(c)
    model = recoverable_model(inst, costs)
    if hint is None and auto_hint:
        hint = constructive_pair_hint(inst, costs)
    res = mip_solve(
        model, time_limit_s=time_limit_s, node_limit=node_limit,
        incumbent_hint=hint, gap_target=gap_target,
    )
    if res.status == MIP_INFEASIBLE:
        raise RuntimeError("recoverable model infeasible; instance is inconsistent")
    if res.x is None:
        raise RuntimeError(f"recoverable solve hit its limit with no pair: {res.status}")
    n = inst.n
    x = np.round(res.x[:n])
    y = np.round(res.x[n : 2 * n])
    value = float(inst.first_stage @ x + costs @ y)
    return RecoverableResult(
        pair=SolutionPair(x=x, y=y), value=value, bound=res.best_bound,
        status=res.status, nodes=res.nodes,
    )


def max_scenario_value_u0(y: np.ndarray, unc) -> float:
    """Worst-case cost of ``y`` under interval-budget-only uncertainty.

    The adversary either spends the whole budget on the chosen items or is
    blocked by their deviation caps: ``min(nominal.y + budget, peak.y)``.
    """
    if not unc.is_interval_budget_only:
        raise ValueError(
            "closed form is valid only without extra uncertainty rows; "
            "solve the scenario LP instead"
        )
    y = np.asarray(y, dtype=np.float64)
    return float(min(unc.nominal @ y + unc.budget, unc.peak @ y))


def incremental_via_rec_reduction(inst: Instance, x: np.ndarray, c: CostsLike) -> float:
    """Incremental value recovered through a recoverable solve.

    First-stage costs are replaced with 0 on the chosen items and a
    prohibitive constant elsewhere, so any optimal pair keeps its first
    stage inside the chosen set.  Cross-check path used by the tests.
    """
    costs = _costs(c)
    x = np.asarray(x, dtype=np.float64)
    big = float(inst.first_stage.sum() + inst.uncertainty.peak.sum()) + 1.0
    modified = Instance(
        feasible=inst.feasible,
        first_stage=np.where(x > 0.5, 0.0, big),
        uncertainty=inst.uncertainty,
        alpha=inst.alpha,
    )
    rec = solve_recoverable(modified, costs)
    if rec.status != MIP_OPTIMAL:
        raise RuntimeError("reduction solve did not finish")
    return float(costs @ rec.pair.y)
