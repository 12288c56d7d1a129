"""Dense-tableau simplex solver with bounded variables.

Solves ``min/max c.x`` subject to linear rows and per-variable bounds.
The implementation is a two-phase primal simplex on a dense tableau:
Dantzig pricing with a permanent switch to Bland's rule after
``10 * (rows + cols)`` degenerate pivots, ratio tests aware of both
variable bounds (bound flips do not pivot), and phase-1 artificials that
are never materialized as columns.

Fixed pivot rules make re-solves of the same model bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernel
from .model import SENSE_EQ, SENSE_GE, SENSE_LE, LinearConstraint

TOL_FEAS = 1e-7
TOL_OPT = 1e-6

_SENSE_CODE = {SENSE_LE: 0, SENSE_EQ: 1, SENSE_GE: 2}

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"


class NumericalFailure(RuntimeError):
    """Pivot-limit exhaustion or a numerically inconsistent tableau."""


@dataclass(frozen=True)
class LpModel:
    """A linear program over reals with per-variable bounds."""

    sense: str  # "min" | "max"
    objective: np.ndarray
    rows: tuple[LinearConstraint, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be min or max, got {self.sense!r}")
        c = np.asarray(self.objective, dtype=np.float64)
        lo = np.asarray(self.lower, dtype=np.float64)
        up = np.asarray(self.upper, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            raise ValueError("objective has non-finite coefficients")
        if c.shape != lo.shape or c.shape != up.shape:
            raise ValueError("objective/bound dimension mismatch")
        if np.any(lo > up):
            raise ValueError("variable with lower bound above upper bound")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "rows", tuple(self.rows))
        n = c.shape[0]
        for row in self.rows:
            if row.max_index() >= n:
                raise ValueError("row references out-of-range variable")

    @property
    def n(self) -> int:
        return self.objective.shape[0]


@dataclass
class LpResult:
    """Primal/dual solution of an :class:`LpModel`.

    ``duals`` holds one multiplier per row and ``reduced_costs`` one entry
    per variable, both reported in the model's own sense (for ``min``:
    ``<=`` rows get nonpositive multipliers, ``>=`` rows nonnegative).
    """

    status: str
    x: Optional[np.ndarray]
    duals: Optional[np.ndarray]
    reduced_costs: Optional[np.ndarray]
    objective: Optional[float]
    pivots: int


def model_arrays(model: LpModel):
    """Dense (c, A, senses, b, lo, up) arrays for the solver core."""
    n = model.n
    m = len(model.rows)
    A = np.zeros((m, n))
    b = np.empty(m)
    senses = np.empty(m, dtype=np.int8)
    for i, row in enumerate(model.rows):
        for j, coef in row.coeffs.items():
            A[i, j] = coef
        b[i] = row.rhs
        senses[i] = _SENSE_CODE[row.sense]
    return model.objective, A, senses, b, model.lower, model.upper


def solve_dense(
    c: np.ndarray,
    A: np.ndarray,
    senses: np.ndarray,
    b: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_pivots: Optional[int] = None,
):
    """Solve ``min c.x`` over dense arrays; the hot path used by branch and bound.

    Returns ``(status, x, duals, reduced_costs, objective, pivots)`` with
    status one of the ``STATUS_*`` strings.  Raises
    :class:`NumericalFailure` on pivot-limit exhaustion.
    """
    m, n = A.shape
    N = n + m

    # slack bounds encode the row sense
    lo = np.empty(N + m)
    up = np.empty(N + m)
    lo[:n] = lower
    up[:n] = upper
    lo[n:N] = np.where(senses == 2, -np.inf, 0.0)
    up[n:N] = np.where(senses == 0, np.inf, 0.0)
    lo[N:] = 0.0
    up[N:] = np.inf

    # nonbasic start: lower bound when finite, else upper, else free at 0
    lo_fin = np.isfinite(lo[:N])
    up_fin = np.isfinite(up[:N])
    vstat = np.where(lo_fin, 0, np.where(up_fin, 1, 3)).astype(np.int8)
    vals = np.where(lo_fin, lo[:N], np.where(up_fin, up[:N], 0.0))

    resid = b - A @ vals[:n] - vals[n:N]
    s = np.where(resid >= 0.0, 1.0, -1.0)

    T = np.empty((m + 2, N))
    T[:m, :n] = s[:, None] * A
    T[:m, n:N] = 0.0
    T[np.arange(m), n + np.arange(m)] = s
    T[m, :n] = c
    T[m, n:N] = 0.0
    T[m + 1, :N] = -T[:m, :N].sum(axis=0) if m else 0.0

    xB = np.abs(resid)
    basis = N + np.arange(m, dtype=np.int64)
    feas_row = TOL_FEAS * (1.0 + np.abs(b))
    if max_pivots is None:
        max_pivots = 50 * (m + N) + 10_000
    bland_after = 10 * (m + n)

    status_code, pivots = _kernel.simplex_run(
        T, xB, basis, vstat, lo, up, feas_row, max_pivots, bland_after
    )

    if status_code in (_kernel.PIVOT_LIMIT, _kernel.NUMERICAL):
        raise NumericalFailure(f"simplex gave up after {pivots} pivots")
    if status_code == _kernel.INFEASIBLE:
        return STATUS_INFEASIBLE, None, None, None, None, pivots
    if status_code == _kernel.UNBOUNDED:
        return STATUS_UNBOUNDED, None, None, None, None, pivots

    z = np.where(vstat == 0, lo[:N], np.where(vstat == 1, up[:N], 0.0))
    in_range = basis < N
    z[basis[in_range]] = xB[in_range]
    x = z[:n].copy()
    duals = -T[m, n:N].copy() if m else np.zeros(0)
    reduced = T[m, :n].copy()
    objective = float(c @ x)
    return STATUS_OPTIMAL, x, duals, reduced, objective, pivots


def lp_solve(model: LpModel, max_pivots: Optional[int] = None) -> LpResult:
    """Solve an LP; deterministic for a fixed model."""
    c, A, senses, b, lo, up = model_arrays(model)
    flip = model.sense == "max"
    status, x, duals, reduced, obj, pivots = solve_dense(
        -c if flip else c, A, senses, b, lo, up, max_pivots
    )
    if status != STATUS_OPTIMAL:
        return LpResult(status, None, None, None, None, pivots)
    if flip:
        duals = -duals
        reduced = -reduced
        obj = float(c @ x)
    return LpResult(STATUS_OPTIMAL, x, duals, reduced, obj, pivots)


def dual_objective(model: LpModel, result: LpResult) -> float:
    """Value of the bound-aware dual at the returned multipliers.

    At an optimum this matches the primal objective up to roundoff; the
    gap check is the module's strong-duality contract.
    """
    if result.status != STATUS_OPTIMAL:
        raise ValueError("dual objective needs an optimal result")
    b = np.array([row.rhs for row in model.rows])
    y = result.duals
    d = result.reduced_costs
    # nonbasic variables sit at a bound, basic ones have zero reduced cost,
    # so d.x picks up exactly the bound terms of the box dual
    return float(y @ b + d @ result.x)


def lp_feasible(
    rows: Sequence[LinearConstraint],
    lower: Sequence[float],
    upper: Sequence[float],
) -> tuple[bool, Optional[np.ndarray]]:
    """Phase-1 feasibility check; returns a witness point when feasible."""
    lower = np.asarray(lower, dtype=np.float64)
    model = LpModel(
        sense="min",
        objective=np.zeros(lower.shape[0]),
        rows=tuple(rows),
        lower=lower,
        upper=np.asarray(upper, dtype=np.float64),
    )
    res = lp_solve(model)
    if res.status == STATUS_OPTIMAL:
        return True, res.x
    return False, None
