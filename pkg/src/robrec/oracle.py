"""Brute-force ground truth for small instances.

Everything here is deliberately independent of the constraint-generation
machinery: feasible sets are enumerated outright, the adversary's LP is
built with its full (finite) row set, and guards are hard errors so the
oracle never silently approximates.
"""

from __future__ import annotations

from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import model as _model
from .lp_kernel import STATUS_OPTIMAL, LpModel, lp_solve
from .model import (
    Instance,
    LinearConstraint,
    UncertaintyModel,
    drop_threshold,
)

ENUM_GUARD = 20
ROBREC_GUARD = 14
VERTEX_GUARD = 6


class OracleGuardError(ValueError):
    """Instance too large for exhaustive ground truth."""


def enumerate_feasible(spec) -> list[np.ndarray]:
    """Exactly the 0-1 feasible set, in lexicographic order."""
    if spec.n > ENUM_GUARD:
        raise OracleGuardError(f"enumeration guard: n={spec.n} > {ENUM_GUARD}")
    return _model.enumerate_binary_feasible(spec)


def adversary_lp(
    unc: UncertaintyModel, solutions: Sequence[np.ndarray], offsets: Sequence[float]
) -> LpModel:
    """LP over (t, delta): max t subject to t <= offset_k + costs.y_k per row.

    ``offsets`` lets the recoverable variant fold a constant first-stage
    cost into each row.
    """
    n = unc.n
    rows = []
    for y, off in zip(solutions, offsets):
        coeffs = {0: 1.0}
        for i in range(n):
            if y[i] > 0.5:
                coeffs[1 + i] = -1.0
        rows.append(
            LinearConstraint(coeffs, "<=", float(off + unc.nominal @ np.round(y)))
        )
    rows.append(LinearConstraint({1 + i: 1.0 for i in range(n)}, "<=", unc.budget))
    for extra in unc.extra:
        rows.append(
            LinearConstraint(
                {1 + i: v for i, v in extra.coeffs.items()}, extra.sense, extra.rhs
            )
        )
    lower = np.concatenate([[-np.inf], np.zeros(n)])
    upper = np.concatenate([[np.inf], unc.deviation])
    obj = np.zeros(n + 1)
    obj[0] = 1.0
    return LpModel(sense="max", objective=obj, rows=tuple(rows), lower=lower, upper=upper)


def _adversary_value(unc, solutions, offsets) -> tuple[float, np.ndarray]:
    res = lp_solve(adversary_lp(unc, solutions, offsets))
    if res.status != STATUS_OPTIMAL:
        raise RuntimeError(f"adversary LP ended {res.status}")
    return float(res.objective), res.x[1:]


def brute_eval(
    inst: Instance, x: np.ndarray, feasible: Optional[list[np.ndarray]] = None
) -> float:
    """Exact worst-case evaluation of a first-stage solution.

    Builds the scenario LP with one row per neighborhood member, so the
    adversary maximizes against every possible repair simultaneously.
    """
    if inst.n > ENUM_GUARD:
        raise OracleGuardError(f"evaluation guard: n={inst.n} > {ENUM_GUARD}")
    x = np.asarray(x, dtype=np.float64)
    if not inst.feasible.contains(x):
        raise ValueError("x is not feasible")
    if feasible is None:
        feasible = enumerate_feasible(inst.feasible)
    Y = np.asarray(feasible)
    chosen = int(round(float(x.sum())))
    dropped = np.round(chosen - Y @ x).astype(int)
    neighbors = list(Y[dropped <= drop_threshold(chosen, inst.alpha)])
    value, _ = _adversary_value(inst.uncertainty, neighbors, [0.0] * len(neighbors))
    return float(inst.first_stage @ x) + value


def brute_robrec(inst: Instance) -> tuple[float, np.ndarray]:
    """Exact robust recoverable optimum by minimizing the evaluation over X."""
    if inst.n > ROBREC_GUARD:
        raise OracleGuardError(f"optimum guard: n={inst.n} > {ROBREC_GUARD}")
    feasible = enumerate_feasible(inst.feasible)
    best_val = np.inf
    best_x = None
    for x in feasible:
        val = brute_eval(inst, x, feasible=feasible)
        if val < best_val - 1e-12:
            best_val = val
            best_x = x
    return float(best_val), best_x


def brute_rec(inst: Instance, costs) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Exact recoverable value by enumerating feasible pairs."""
    if inst.n > ENUM_GUARD:
        raise OracleGuardError(f"enumeration guard: n={inst.n} > {ENUM_GUARD}")
    costs = np.asarray(costs, dtype=np.float64)
    X = np.asarray(enumerate_feasible(inst.feasible))
    counts = np.round(X.sum(axis=1)).astype(int)
    dropped = counts[:, None] - np.round(X @ X.T).astype(int)
    thresholds = np.array([drop_threshold(c, inst.alpha) for c in counts])
    pair_ok = dropped <= thresholds[:, None]
    values = (X @ inst.first_stage)[:, None] + (X @ costs)[None, :]
    values[~pair_ok] = np.inf
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    return float(values[i, j]), (X[i], X[j])


def delta_polytope_vertices(unc: UncertaintyModel) -> list[np.ndarray]:
    """All vertices of the deviation polytope, by active-set enumeration."""
    n = unc.n
    if n > VERTEX_GUARD:
        raise OracleGuardError(f"vertex guard: n={n} > {VERTEX_GUARD}")
    planes: list[tuple[np.ndarray, float]] = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        planes.append((e, 0.0))
        planes.append((e.copy(), float(unc.deviation[i])))
    planes.append((np.ones(n), unc.budget))
    for extra in unc.extra:
        planes.append((extra.dense(n), extra.rhs))

    seen = set()
    verts: list[np.ndarray] = []
    for combo in combinations(range(len(planes)), n):
        M = np.array([planes[k][0] for k in combo])
        rhs = np.array([planes[k][1] for k in combo])
        try:
            d = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            continue
        if not unc.contains_delta(d, tol=1e-9):
            continue
        key = tuple(np.round(d, 9))
        if key not in seen:
            seen.add(key)
            verts.append(d)
    return verts


def extreme_point_value(inst: Instance) -> float:
    """Best lower bound obtainable from deviation-polytope vertices alone.

    Documents why a finite vertex representation of the uncertainty set is
    not enough: this value can be strictly below the true adversarial one.
    """
    if inst.n > VERTEX_GUARD:
        raise OracleGuardError(f"vertex guard: n={inst.n} > {VERTEX_GUARD}")
    best = -np.inf
    for delta in delta_polytope_vertices(inst.uncertainty):
        costs = inst.uncertainty.nominal + delta
        val, _ = brute_rec(inst, costs)
        best = max(best, val)
    return float(best)
