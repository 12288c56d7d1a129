"""Builders and random generators for the three benchmark problem families.

Random instances follow the experiment protocol: first-stage and nominal
second-stage costs are uniform integers in [1, 20], deviations uniform
integers in [0, 100], budget 10% of the total deviation, and (for the
knapsack family) weights uniform in [1, 20] with capacity 30% of the
total weight.  Draw order is fixed per family so a seed pins the instance
bytes.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import FeasibleSetSpec, Instance, LinearConstraint, UncertaintyModel

COST_LOW, COST_HIGH = 1, 20
DEV_LOW, DEV_HIGH = 0, 100
BUDGET_SHARE = 0.1
CAPACITY_SHARE = 0.3


def build_selection(n: int, p: int) -> FeasibleSetSpec:
    """All 0-1 points choosing exactly ``p`` of ``n`` items."""
    if not 1 <= p <= n:
        raise ValueError(f"need 1 <= p <= n, got p={p}, n={n}")
    row = LinearConstraint({j: 1.0 for j in range(n)}, "=", float(p))
    return FeasibleSetSpec(
        n=n, constraints=(row,), equal_cardinality=p, integral_polytope=True
    )


def build_assignment(m: int) -> FeasibleSetSpec:
    """Perfect assignments on an m-by-m grid; variable (i, j) has index i*m + j."""
    if m < 1:
        raise ValueError("m must be positive")
    rows = []
    for i in range(m):
        rows.append(LinearConstraint({i * m + j: 1.0 for j in range(m)}, "=", 1.0))
    for j in range(m):
        rows.append(LinearConstraint({i * m + j: 1.0 for i in range(m)}, "=", 1.0))
    return FeasibleSetSpec(
        n=m * m, constraints=tuple(rows), equal_cardinality=m, integral_polytope=True
    )


def build_min_knapsack(weights, capacity: float) -> FeasibleSetSpec:
    """Covers of a capacity: subsets with total weight at least ``capacity``."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if capacity > float(w.sum()):
        raise ValueError("capacity exceeds total weight: feasible set is empty")
    row = LinearConstraint(
        {j: float(w[j]) for j in range(len(w))}, ">=", float(capacity)
    )
    return FeasibleSetSpec(
        n=len(w), constraints=(row,), equal_cardinality=None, integral_polytope=False
    )


def _rng(seed, *stream) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, *stream))))


def _uniform_int(rng, low, high, size) -> np.ndarray:
    # inclusive of both endpoints
    return rng.integers(low, high, size=size, endpoint=True).astype(np.float64)


def gen_random_assignment(m: int, seed: int, alpha: float = 0.5) -> Instance:
    """Random assignment instance per the experiment protocol (n = m*m)."""
    if m < 1:
        raise ValueError("m must be positive")
    rng = _rng(seed, 0)
    n = m * m
    first = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    nominal = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    deviation = _uniform_int(rng, DEV_LOW, DEV_HIGH, n)
    unc = UncertaintyModel(
        nominal=nominal,
        deviation=deviation,
        budget=BUDGET_SHARE * float(deviation.sum()),
    )
    return Instance(
        feasible=build_assignment(m), first_stage=first, uncertainty=unc, alpha=alpha
    )


def gen_random_knapsack(n: int, seed: int, alpha: float = 0.5) -> Instance:
    """Random minimum-knapsack instance per the experiment protocol."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = _rng(seed, 1)
    first = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    nominal = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    weights = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    deviation = _uniform_int(rng, DEV_LOW, DEV_HIGH, n)
    unc = UncertaintyModel(
        nominal=nominal,
        deviation=deviation,
        budget=BUDGET_SHARE * float(deviation.sum()),
    )
    return Instance(
        feasible=build_min_knapsack(weights, CAPACITY_SHARE * float(weights.sum())),
        first_stage=first,
        uncertainty=unc,
        alpha=alpha,
    )


def gen_random_selection(
    n: int, seed: int, alpha: float = 0.5, p: Optional[int] = None
) -> Instance:
    """Random selection instance (same cost protocol; used by the test corpus)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = _rng(seed, 2)
    if p is None:
        p = int(rng.integers(1, n, endpoint=True))
    first = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    nominal = _uniform_int(rng, COST_LOW, COST_HIGH, n)
    deviation = _uniform_int(rng, DEV_LOW, DEV_HIGH, n)
    unc = UncertaintyModel(
        nominal=nominal,
        deviation=deviation,
        budget=BUDGET_SHARE * float(deviation.sum()),
    )
    return Instance(
        feasible=build_selection(n, p), first_stage=first, uncertainty=unc, alpha=alpha
    )
