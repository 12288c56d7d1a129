"""Branch-and-bound for 0-1 mixed integer programs over the LP kernel.

Deterministic search: most-fractional branching (ties to the lowest
index), best-bound node selection (ties FIFO).  Incumbent values are
recomputed from re-rounded 0-1 vectors against the original objective so
tableau drift cannot leak into reported optima.  No cutting planes; the
only presolve is singleton-row bound tightening at the root.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import lp_kernel
from .lp_kernel import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LpModel,
    NumericalFailure,
)
from .model import FeasibleSetSpec

TOL_INT = 1e-6

MIP_OPTIMAL = "optimal"
MIP_FEASIBLE_GAP = "feasible_gap"
MIP_INFEASIBLE = "infeasible"
MIP_NO_INCUMBENT = "time_limit_no_incumbent"


@dataclass(frozen=True)
class MipModel:
    """An LP payload plus the set of indices constrained to {0, 1}."""

    lp: LpModel
    binary: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.binary)))
        object.__setattr__(self, "binary", idx)
        n = self.lp.n
        for j in idx:
            if not (0 <= j < n):
                raise ValueError(f"binary index {j} out of range")
            if self.lp.lower[j] < -TOL_INT or self.lp.upper[j] > 1 + TOL_INT:
                raise ValueError(f"binary variable {j} has bounds outside [0, 1]")


@dataclass
class MipResult:
    status: str
    x: Optional[np.ndarray]
    value: Optional[float]
    best_bound: float
    gap: Optional[float]
    nodes: int
    elapsed_seconds: float


def _tighten_singletons(A, senses, b, lo, up, binary_mask):
    """Fold single-variable rows into the bounds; binaries round to integers."""
    nnz = (A != 0).sum(axis=1)
    for i in np.nonzero(nnz == 1)[0]:
        j = int(np.nonzero(A[i])[0][0])
        a = A[i, j]
        val = b[i] / a
        sense = senses[i]
        if sense == 1:
            lo[j] = max(lo[j], val)
            up[j] = min(up[j], val)
        elif (sense == 0) == (a > 0):
            up[j] = min(up[j], val)
        else:
            lo[j] = max(lo[j], val)
    if binary_mask.any():
        lo_b = np.ceil(lo[binary_mask] - TOL_INT)
        up_b = np.floor(up[binary_mask] + TOL_INT)
        lo[binary_mask] = np.maximum(lo_b, 0.0)
        up[binary_mask] = np.minimum(up_b, 1.0)


def mip_solve(
    model: MipModel,
    time_limit_s: Optional[float] = None,
    gap_target: float = 0.0,
    node_limit: Optional[int] = None,
    incumbent_hint: Optional[Sequence[float]] = None,
    on_node: Optional[Callable[[float, Optional[float], int], None]] = None,
) -> MipResult:
    """Solve a 0-1 MIP.

    With no limits and ``gap_target=0`` the result is exact.  When a limit
    triggers, the returned ``(best_bound, value)`` pair still sandwiches
    the true optimum.  ``incumbent_hint`` may supply a known-feasible full
    solution vector used to seed pruning; an infeasible hint is ignored.
    """
    t0 = time.monotonic()
    deadline = None if time_limit_s is None else t0 + float(time_limit_s)

    c, A, senses, b, lo0, up0 = lp_kernel.model_arrays(model.lp)
    flip = model.lp.sense == "max"
    if flip:
        c = -c
    n = model.lp.n
    lo0 = lo0.copy()
    up0 = up0.copy()
    bins = np.array(model.binary, dtype=np.int64)
    bin_mask = np.zeros(n, dtype=bool)
    bin_mask[bins] = True
    _tighten_singletons(A, senses, b, lo0, up0, bin_mask)

    row_scale = 1.0 + (float(np.abs(b).max()) if len(b) else 0.0)

    def row_residual_ok(x: np.ndarray) -> bool:
        if not len(b):
            return True
        Ax = A @ x
        r = Ax - b
        ok_le = (senses != 0) | (r <= 1e-6 * row_scale)
        ok_ge = (senses != 2) | (r >= -1e-6 * row_scale)
        ok_eq = (senses != 1) | (np.abs(r) <= 1e-6 * row_scale)
        return bool(np.all(ok_le & ok_ge & ok_eq))

    inc_val = np.inf
    inc_x: Optional[np.ndarray] = None

    # when the objective touches only binary variables with integer
    # coefficients, feasible values are integers and anything within one
    # unit of the incumbent is provably no better
    nonbin = np.ones(n, dtype=bool)
    nonbin[bins] = False
    integral_objective = bool(
        np.all(c[nonbin] == 0.0) and np.all(np.round(c) == c) and np.all(np.abs(c) < 2**40)
    )

    # pure-binary covering structure: every >= row has nonnegative
    # coefficients and every <= row nonpositive ones, so rounding any LP
    # point up stays feasible and yields an incumbent candidate per node
    roundup = not nonbin.any() and all(
        (senses[i] == 2 and np.all(A[i] >= 0.0))
        or (senses[i] == 0 and np.all(A[i] <= 0.0))
        for i in range(len(b))
    )

    def prune_cut() -> float:
        # slightly below the incumbent; inf while no incumbent exists
        if not np.isfinite(inc_val):
            return inc_val
        if integral_objective:
            return inc_val - 1.0 + TOL_INT
        return inc_val - 1e-9 * max(1.0, abs(inc_val))
    if incumbent_hint is not None:
        hint = np.asarray(incumbent_hint, dtype=np.float64).copy()
        if hint.shape == (n,):
            hint[bins] = np.round(hint[bins])
            if (
                np.all(hint >= lo0 - 1e-9)
                and np.all(hint <= up0 + 1e-9)
                and row_residual_ok(hint)
            ):
                inc_x = np.clip(hint, lo0, up0)
                inc_val = float(c @ inc_x)

    def user_value(v: float) -> float:
        return -v if flip else v

    if np.any(lo0 > up0 + 1e-12):
        return MipResult(
            MIP_INFEASIBLE, None, None, user_value(np.inf), None, 0,
            time.monotonic() - t0,
        )

    seq = 0
    heap: list = [(-np.inf, seq, lo0, up0)]
    nodes = 0
    stopped = None  # "time" | "nodes" | "gap"

    def current_bound() -> float:
        top = heap[0][0] if heap else np.inf
        return min(top, inc_val)

    while heap:
        if deadline is not None and time.monotonic() > deadline:
            stopped = "time"
            break
        if node_limit is not None and nodes >= node_limit:
            stopped = "nodes"
            break
        bound, _, lo, up = heapq.heappop(heap)
        if bound >= prune_cut():
            # heap is bound-ordered: everything left is prunable
            heap.clear()
            break

        status, x, _, _, val, _ = lp_kernel.solve_dense(c, A, senses, b, lo, up)
        nodes += 1
        if status == STATUS_UNBOUNDED:
            raise NumericalFailure("LP relaxation unbounded; 0-1 model is malformed")
        if status == STATUS_INFEASIBLE:
            if on_node is not None:
                on_node(user_value(current_bound()),
                        None if inc_x is None else user_value(inc_val), nodes)
            continue

        if val < prune_cut():
            if roundup:
                cand = np.ceil(x - TOL_INT)
                np.clip(cand, lo, up, out=cand)
                cand_val = float(c @ cand)
                if cand_val < inc_val - 1e-12:
                    inc_val = cand_val
                    inc_x = cand
            frac = np.abs(x[bins] - np.round(x[bins])) if len(bins) else np.zeros(0)
            if not len(bins) or float(frac.max()) <= TOL_INT:
                cand = x.copy()
                cand[bins] = np.round(cand[bins])
                cand_val = float(c @ cand)
                if cand_val < inc_val - 1e-12:
                    inc_val = cand_val
                    inc_x = cand
            else:
                j = int(bins[int(np.argmax(frac))])
                for fix in (0.0, 1.0):
                    lo2 = lo.copy()
                    up2 = up.copy()
                    if fix == 0.0:
                        up2[j] = 0.0
                    else:
                        lo2[j] = 1.0
                    seq += 1
                    heapq.heappush(heap, (val, seq, lo2, up2))

        if on_node is not None:
            on_node(user_value(current_bound()),
                    None if inc_x is None else user_value(inc_val), nodes)
        if inc_x is not None and gap_target > 0.0:
            bound_now = current_bound()
            if (inc_val - bound_now) / max(abs(inc_val), 1e-9) <= gap_target:
                stopped = "gap"
                break

    elapsed = time.monotonic() - t0
    if inc_x is None:
        if stopped is None:
            return MipResult(MIP_INFEASIBLE, None, None, user_value(np.inf), None,
                             nodes, elapsed)
        return MipResult(MIP_NO_INCUMBENT, None, None,
                         user_value(heap[0][0] if heap else np.inf), None,
                         nodes, elapsed)

    bound = current_bound()
    gap = (inc_val - bound) / max(abs(inc_val), 1e-9)
    status = MIP_OPTIMAL if stopped is None else MIP_FEASIBLE_GAP
    if stopped is None:
        bound = inc_val
        gap = 0.0
    return MipResult(status, inc_x, user_value(inc_val), user_value(bound), gap,
                     nodes, elapsed)


def binary_set_nonempty(spec: FeasibleSetSpec) -> bool:
    """One MIP feasibility solve for specs too large to enumerate."""
    n = spec.n
    model = MipModel(
        lp=LpModel(
            sense="min",
            objective=np.zeros(n),
            rows=spec.constraints,
            lower=np.zeros(n),
            upper=np.ones(n),
        ),
        binary=tuple(range(n)),
    )
    return mip_solve(model).status != MIP_INFEASIBLE
