"""Shared fixtures: bundled instances and a random small-instance corpus."""

from importlib import resources

import numpy as np
import pytest

from robrec.model import Instance, UncertaintyModel, instance_from_json
from robrec.problems import build_assignment, build_min_knapsack, build_selection


def fixture_instance(name: str) -> Instance:
    return instance_from_json(
        (resources.files("robrec") / "fixtures" / name).read_text()
    )


@pytest.fixture(scope="session")
def toy3() -> Instance:
    # selection n=3 choose 2; C=(1,2,3), nominal=(2,1,4), dev=(3,3,0), budget 3
    return fixture_instance("toy3.json")


@pytest.fixture(scope="session")
def counterexample() -> Instance:
    # two-variable pick-one set with zero nominal costs and unit budget
    return fixture_instance("counterexample.json")


@pytest.fixture(scope="session")
def knap3() -> Instance:
    return fixture_instance("knap3.json")


ALPHA_GRID = (0.0, 0.3, 0.5, 1.0)


def random_small_instance(rng: np.random.Generator, family=None, alpha=None) -> Instance:
    """Random integer-data instance small enough for the brute oracles."""
    if family is None:
        family = ("selection", "assignment", "knapsack")[int(rng.integers(3))]
    if family == "selection":
        n = int(rng.integers(2, 9))
        p = int(rng.integers(1, n + 1))
        spec = build_selection(n, p)
    elif family == "assignment":
        m = int(rng.integers(2, 4))
        spec = build_assignment(m)
        n = m * m
    else:
        n = int(rng.integers(2, 9))
        w = rng.integers(1, 10, n).astype(float)
        capacity = float(np.ceil(0.45 * w.sum()))
        spec = build_min_knapsack(w, capacity)
    first = rng.integers(0, 11, n).astype(float)
    nominal = rng.integers(0, 11, n).astype(float)
    deviation = rng.integers(0, 9, n).astype(float)
    if rng.integers(4) == 0:
        deviation[rng.integers(n)] = 0.0
    budget = float(rng.integers(0, int(deviation.sum()) + 2))
    if alpha is None:
        alpha = float(ALPHA_GRID[int(rng.integers(len(ALPHA_GRID)))])
    return Instance(
        feasible=spec,
        first_stage=first,
        uncertainty=UncertaintyModel(nominal=nominal, deviation=deviation, budget=budget),
        alpha=alpha,
    )


def corpus(seed: int, count: int) -> list[Instance]:
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        fam = ("selection", "assignment", "knapsack")[len(out) % 3]
        alpha = ALPHA_GRID[len(out) % len(ALPHA_GRID)]
        out.append(random_small_instance(rng, family=fam, alpha=alpha))
    return out
