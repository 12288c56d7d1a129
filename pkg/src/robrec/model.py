"""Domain types for robust recoverable 0-1 optimization.

An :class:`Instance` couples a 0-1 feasible set (linear constraints over
binary variables), nonnegative first-stage costs, a budgeted polyhedral
uncertainty model for the second-stage costs, and a recovery fraction
``alpha`` that limits how many chosen elements may be dropped when the
first-stage solution is repaired.

All types are immutable after construction and safe to share across
concurrent workers.  Instances round-trip through a canonical JSON format
(numbers stored as decimal strings) so test fixtures stay diff-friendly
and byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

SENSE_LE = "<="
SENSE_EQ = "="
SENSE_GE = ">="
SENSES = (SENSE_LE, SENSE_EQ, SENSE_GE)

# Denominator cap used when recovering the intended rational value of a
# fraction supplied as a double (e.g. alpha=0.3 read from JSON).
_RATIONALIZE_DENOMINATOR = 10**6


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""


class InstanceValidationError(ValueError):
    """Raised when a parsed instance violates a model invariant."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def _as_readonly_f64(values, name: str, n: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def rationalize(value: float) -> Fraction:
    """Closest small-denominator rational to ``value``.

    Recovers the intended exact value of fractions that were stored as
    doubles (0.3 -> 3/10), which keeps ceiling computations like the
    neighborhood overlap floor away from floating-point boundaries.
    """
    return Fraction(value).limit_denominator(_RATIONALIZE_DENOMINATOR)


def overlap_floor(m: int, alpha: float) -> int:
    """Minimum number of kept elements for an equal-cardinality problem.

    Computed as ``ceil(m * (1 - alpha))`` in exact rational arithmetic.
    """
    kept = m * (1 - rationalize(alpha))
    return int(math.ceil(kept)) if kept % 1 else int(kept)


@dataclass(frozen=True)
class LinearConstraint:
    """A sparse linear row ``sum_j coeffs[j] * v[j]  <sense>  rhs``.

    Explicit zero coefficients are dropped at construction; variable
    indices are validated against a dimension only once the row is placed
    into a :class:`FeasibleSetSpec` or uncertainty model.
    """

    coeffs: Mapping[int, float]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        cleaned = {}
        for idx, coef in self.coeffs.items():
            idx = int(idx)
            coef = float(coef)
            if idx < 0:
                raise ValueError(f"negative variable index {idx}")
            if not math.isfinite(coef):
                raise ValueError(f"non-finite coefficient at index {idx}")
            if coef != 0.0:
                cleaned[idx] = coef
        object.__setattr__(self, "coeffs", cleaned)
        object.__setattr__(self, "rhs", float(self.rhs))

    def max_index(self) -> int:
        return max(self.coeffs, default=-1)

    def value(self, x: Sequence[float]) -> float:
        return float(sum(c * x[i] for i, c in self.coeffs.items()))

    def satisfied(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        lhs = self.value(x)
        if self.sense == SENSE_LE:
            return lhs <= self.rhs + tol
        if self.sense == SENSE_GE:
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol

    def dense(self, n: int) -> np.ndarray:
        row = np.zeros(n)
        for i, c in self.coeffs.items():
            row[i] = c
        return row


@dataclass(frozen=True)
class FeasibleSetSpec:
    """Linear-constraint description of the 0-1 feasible set.

    ``equal_cardinality`` asserts that every feasible point selects exactly
    that many elements; ``integral_polytope`` asserts that the box-and-rows
    relaxation has integral vertices (a user-supplied fact required by the
    Lagrangian bound).  Both assertions are checked by enumeration for
    small dimensions in :func:`validate`.
    """

    n: int
    constraints: tuple[LinearConstraint, ...]
    equal_cardinality: Optional[int] = None
    integral_polytope: bool = False

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.n <= 0:
            raise ValueError("dimension must be positive")
        for row in self.constraints:
            if row.max_index() >= self.n:
                raise ValueError(
                    f"constraint references index {row.max_index()} but n={self.n}"
                )
        if self.equal_cardinality is not None and not (
            1 <= int(self.equal_cardinality) <= self.n
        ):
            raise ValueError("equal_cardinality out of range")

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        return all(row.satisfied(x, tol) for row in self.constraints)


@dataclass(frozen=True, eq=False)
class UncertaintyModel:
    """Budgeted-interval cost uncertainty with optional extra linear rows.

    Scenarios are ``nominal + delta`` with ``0 <= delta <= deviation``,
    ``sum(delta) <= budget`` and ``delta`` satisfying every row in
    ``extra``.  With ``extra`` empty this is the plain continuous budgeted
    interval model.
    """

    nominal: np.ndarray
    deviation: np.ndarray
    budget: float
    extra: tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        n = np.asarray(self.nominal).shape[0]
        object.__setattr__(self, "nominal", _as_readonly_f64(self.nominal, "nominal"))
        object.__setattr__(
            self, "deviation", _as_readonly_f64(self.deviation, "deviation", n)
        )
        object.__setattr__(self, "budget", float(self.budget))
        object.__setattr__(self, "extra", tuple(self.extra))
        for row in self.extra:
            if row.max_index() >= n:
                raise ValueError("extra constraint references out-of-range index")

    @property
    def n(self) -> int:
        return self.nominal.shape[0]

    @property
    def is_interval_budget_only(self) -> bool:
        """True when no extra rows are present (the closed-form adversary applies)."""
        return len(self.extra) == 0

    @property
    def peak(self) -> np.ndarray:
        """Componentwise worst costs ``nominal + deviation``."""
        return self.nominal + self.deviation

    def contains_delta(self, delta: Sequence[float], tol: float = 1e-6) -> bool:
        d = np.asarray(delta, dtype=np.float64)
        if d.shape != self.nominal.shape:
            return False
        scale = 1.0 + float(np.max(self.deviation, initial=0.0)) + abs(self.budget)
        if np.any(d < -tol * scale) or np.any(d > self.deviation + tol * scale):
            return False
        if float(d.sum()) > self.budget + tol * scale:
            return False
        return all(row.satisfied(d, tol * scale) for row in self.extra)

    def __eq__(self, other):
        if not isinstance(other, UncertaintyModel):
            return NotImplemented
        return (
            np.array_equal(self.nominal, other.nominal)
            and np.array_equal(self.deviation, other.deviation)
            and self.budget == other.budget
            and self.extra == other.extra
        )


@dataclass(frozen=True, eq=False)
class Scenario:
    """A realized second-stage cost vector together with its deviation."""

    costs: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "costs", _as_readonly_f64(self.costs, "costs"))
        object.__setattr__(
            self, "delta", _as_readonly_f64(self.delta, "delta", self.costs.shape[0])
        )

    @classmethod
    def from_delta(cls, uncertainty: UncertaintyModel, delta) -> "Scenario":
        delta = np.asarray(delta, dtype=np.float64)
        return cls(costs=uncertainty.nominal + delta, delta=delta)

    @classmethod
    def nominal(cls, uncertainty: UncertaintyModel) -> "Scenario":
        return cls.from_delta(uncertainty, np.zeros(uncertainty.n))

    @classmethod
    def peak(cls, uncertainty: UncertaintyModel) -> "Scenario":
        return cls.from_delta(uncertainty, uncertainty.deviation.copy())

    def in_model(self, uncertainty: UncertaintyModel, tol: float = 1e-6) -> bool:
        return uncertainty.contains_delta(self.delta, tol)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return np.array_equal(self.costs, other.costs) and np.array_equal(
            self.delta, other.delta
        )


@dataclass(frozen=True, eq=False)
class SolutionPair:
    """A first-stage solution and a repaired second-stage solution."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_readonly_f64(self.x, "x"))
        object.__setattr__(self, "y", _as_readonly_f64(self.y, "y", self.x.shape[0]))

    def feasible(self, inst: "Instance", tol: float = 1e-9) -> bool:
        return (
            inst.feasible.contains(self.x, tol)
            and inst.feasible.contains(self.y, tol)
            and in_neighborhood(self.x, self.y, inst.alpha)
        )

    def __eq__(self, other):
        if not isinstance(other, SolutionPair):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


@dataclass(frozen=True, eq=False)
class Instance:
    """A full robust recoverable problem instance."""

    feasible: FeasibleSetSpec
    first_stage: np.ndarray
    uncertainty: UncertaintyModel
    alpha: float

    def __post_init__(self):
        object.__setattr__(
            self,
            "first_stage",
            _as_readonly_f64(self.first_stage, "first_stage", self.feasible.n),
        )
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.feasible.n

    @property
    def alpha_fraction(self) -> Fraction:
        return rationalize(self.alpha)

    def overlap_floor(self) -> int:
        """Kept-element floor for the equal-cardinality neighborhood form."""
        m = self.feasible.equal_cardinality
        if m is None:
            raise ValueError("instance has no equal-cardinality assertion")
        return overlap_floor(m, self.alpha)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.feasible == other.feasible
            and np.array_equal(self.first_stage, other.first_stage)
            and self.uncertainty == other.uncertainty
            and self.alpha == other.alpha
        )


@dataclass
class Bracket:
    """A certified [lower, upper] interval produced by an iterative solver."""

    lb: float
    ub: float
    status: str  # converged | time_limit | iteration_limit
    iterations: int
    elapsed_seconds: float
    witness_scenario: Optional[Scenario] = None
    witness_solution: Optional[np.ndarray] = None


def in_neighborhood(x: Sequence[float], y: Sequence[float], alpha: float) -> bool:
    """Whether ``y`` keeps enough of ``x``'s chosen elements.

    Checks ``sum_i x_i (1 - y_i) <= alpha * sum_i x_i`` in exact rational
    arithmetic (membership of ``y`` in the feasible set is not checked
    here).
    """
    xv = np.asarray(x)
    yv = np.asarray(y)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    chosen = int(round(float(xv.sum())))
    dropped = int(round(float((xv * (1 - yv)).sum())))
    return Fraction(dropped) <= rationalize(alpha) * chosen


# ---------------------------------------------------------------------------
# Canonical JSON instance format
# ---------------------------------------------------------------------------

_FIELD_ORDER = (
    "n",
    "constraints",
    "equal_cardinality",
    "integral_polytope",
    "C",
    "nominal",
    "deviation",
    "budget",
    "extra_constraints",
    "alpha",
)


def _num_to_str(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _num_from_str(s, what: str) -> float:
    try:
        return float(s)
    except (TypeError, ValueError):
        raise InstanceFormatError(f"bad number for {what}: {s!r}") from None


def _constraint_to_json(row: LinearConstraint) -> dict:
    return {
        "coeffs": {str(i): _num_to_str(c) for i, c in sorted(row.coeffs.items())},
        "sense": row.sense,
        "rhs": _num_to_str(row.rhs),
    }


def _constraint_from_json(obj, what: str) -> LinearConstraint:
    try:
        coeffs = {int(i): _num_from_str(c, what) for i, c in obj["coeffs"].items()}
        return LinearConstraint(coeffs, obj["sense"], _num_from_str(obj["rhs"], what))
    except InstanceFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InstanceFormatError(f"bad constraint in {what}: {exc}") from None


def instance_to_json(inst: Instance) -> str:
    """Canonical JSON text for an instance (stable field and key order)."""
    doc = {
        "n": inst.n,
        "constraints": [_constraint_to_json(r) for r in inst.feasible.constraints],
        "equal_cardinality": inst.feasible.equal_cardinality,
        "integral_polytope": inst.feasible.integral_polytope,
        "C": [_num_to_str(v) for v in inst.first_stage],
        "nominal": [_num_to_str(v) for v in inst.uncertainty.nominal],
        "deviation": [_num_to_str(v) for v in inst.uncertainty.deviation],
        "budget": _num_to_str(inst.uncertainty.budget),
        "extra_constraints": [
            _constraint_to_json(r) for r in inst.uncertainty.extra
        ],
        "alpha": _num_to_str(inst.alpha),
    }
    return json.dumps(doc, indent=2) + "\n"


def instance_from_json(text: str) -> Instance:
    """Parse and validate an instance from canonical JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    missing = [k for k in _FIELD_ORDER if k not in doc]
    if missing:
        raise InstanceFormatError(f"missing fields: {', '.join(missing)}")
    try:
        n = int(doc["n"])
        ec = doc["equal_cardinality"]
        spec = FeasibleSetSpec(
            n=n,
            constraints=tuple(
                _constraint_from_json(r, "constraints") for r in doc["constraints"]
            ),
            equal_cardinality=None if ec is None else int(ec),
            integral_polytope=bool(doc["integral_polytope"]),
        )
        unc = UncertaintyModel(
            nominal=[_num_from_str(v, "nominal") for v in doc["nominal"]],
            deviation=[_num_from_str(v, "deviation") for v in doc["deviation"]],
            budget=_num_from_str(doc["budget"], "budget"),
            extra=tuple(
                _constraint_from_json(r, "extra_constraints")
                for r in doc["extra_constraints"]
            ),
        )
        inst = Instance(
            feasible=spec,
            first_stage=[_num_from_str(v, "C") for v in doc["C"]],
            uncertainty=unc,
            alpha=_num_from_str(doc["alpha"], "alpha"),
        )
    except InstanceFormatError:
        raise
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(str(exc)) from None
    violations = validate(inst)
    if violations:
        raise InstanceValidationError(violations)
    return inst


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(instance_to_json(inst))


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_json(fh.read())


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

_ENUM_LIMIT = 20


def drop_threshold(chosen: int, alpha: float) -> int:
    """Largest integer drop count allowed by the recovery fraction.

    ``dropped <= alpha * chosen`` for integer ``dropped`` is equivalent to
    comparing against this exact rational floor.
    """
    return math.floor(rationalize(alpha) * chosen)


def enumerate_binary_feasible(spec: FeasibleSetSpec) -> list[np.ndarray]:
    """All 0-1 feasible points, lexicographic (x_1 most significant).

    Intended for small dimensions only; callers enforce their own guards.
    """
    n = spec.n
    codes = np.arange(1 << n, dtype=np.uint32)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)
    bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
    keep = np.ones(len(codes), dtype=bool)
    for row in spec.constraints:
        lhs = bits @ row.dense(n)
        if row.sense == SENSE_LE:
            keep &= lhs <= row.rhs + 1e-9
        elif row.sense == SENSE_GE:
            keep &= lhs >= row.rhs - 1e-9
        else:
            keep &= np.abs(lhs - row.rhs) <= 1e-9
    return list(bits[keep])


def validate(inst: Instance) -> list[str]:
    """All invariant violations for an instance (empty means valid)."""
    out: list[str] = []
    n = inst.n
    unc = inst.uncertainty
    if unc.n != n:
        out.append(f"uncertainty dimension {unc.n} != n={n}")
        return out
    if np.any(inst.first_stage < 0):
        out.append("first-stage cost negative")
    if np.any(unc.nominal < 0):
        out.append("nominal cost negative")
    if np.any(unc.deviation < 0):
        out.append("deviation negative")
    if unc.budget < 0:
        out.append("budget negative")
    if not (0.0 <= inst.alpha <= 1.0):
        out.append(f"alpha={inst.alpha} outside [0, 1]")
    zero = np.zeros(n)
    for k, row in enumerate(unc.extra):
        if not row.satisfied(zero):
            out.append(f"extra constraint {k} excludes delta=0")

    if n <= _ENUM_LIMIT:
        points = enumerate_binary_feasible(inst.feasible)
        if not points:
            out.append("feasible set is empty")
        m = inst.feasible.equal_cardinality
        if m is not None:
            bad = [p for p in points if int(round(p.sum())) != m]
            if bad:
                out.append(
                    f"equal_cardinality={m} violated by a feasible point "
                    f"with {int(round(bad[0].sum()))} elements"
                )
    else:
        from . import mip_kernel  # deferred: avoids an import cycle

        if not mip_kernel.binary_set_nonempty(inst.feasible):
            out.append("feasible set is empty")
    return out
