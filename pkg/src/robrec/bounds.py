"""Lower bounds, the two-solve upper bound, and ratio reporting.

Three bound families are implemented: the scenario-seeded heuristic and
adversarial bounds (delegated to :mod:`robrec.cut_loop`), a single-MIP
bound obtained by relaxing the repair's feasibility to a cardinality (or
kept-fraction) condition and dualizing the inner adversary, and a
Lagrangian bound that prices the kept-element row into the objective and
searches the multiplier by golden section.

Every bound returns its proven safe value when a solver limit triggers:
for the bound MIPs that is the dual bound, never the incumbent.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import core_solvers as _core
from . import cut_loop as _loop
from .lp_kernel import LpModel
from .mip_kernel import MIP_OPTIMAL, MipModel, mip_solve
from .model import Bracket, Instance, LinearConstraint, Scenario, rationalize

GOLDEN_MU_TOL = 0.1
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class BoundValue:
    value: float
    exact: bool
    status: str
    detail: Optional[float] = None  # multiplier for the Lagrangian bound


@dataclass
class UpperBoundResult:
    ub: float
    x_under: Optional[np.ndarray]
    x_over: Optional[np.ndarray]
    rec_nominal: Optional[_core.RecoverableResult]
    rec_peak: Optional[_core.RecoverableResult]
    partial: bool


def _leq_extra_rows(unc) -> list[tuple[dict[int, float], float]]:
    """Extra deviation rows in <= form (equalities split in two)."""
    out = []
    for row in unc.extra:
        if row.sense in ("<=", "="):
            out.append((dict(row.coeffs), row.rhs))
        if row.sense in (">=", "="):
            out.append(({i: -v for i, v in row.coeffs.items()}, -row.rhs))
    return out


def selection_bound_model(inst: Instance) -> MipModel:
    """Single-MIP lower bound from the relaxed-repair dual.

    The repair is relaxed to its intersection condition with the first
    stage (plus the cardinality row for equal-cardinality problems), the
    inner budget adversary is dualized, and the product terms are
    linearized with bounded auxiliaries.  Extra deviation rows add one
    nonnegative dual each.
    """
    n = inst.n
    unc = inst.uncertainty
    extra = _leq_extra_rows(unc)
    ne = len(extra)
    # layout: x | y | u | z | pi | w
    xo, yo, uo, zo = 0, n, 2 * n, 3 * n
    pio = 4 * n
    wo = 4 * n + 1
    nv = wo + ne

    rows = list(inst.feasible.constraints)
    m = inst.feasible.equal_cardinality
    if m is not None:
        rows.append(
            LinearConstraint(
                {zo + i: 1.0 for i in range(n)}, ">=", float(inst.overlap_floor())
            )
        )
        rows.append(LinearConstraint({yo + i: 1.0 for i in range(n)}, "=", float(m)))
    else:
        keep = float(1 - rationalize(inst.alpha))
        coeffs = {xo + i: keep for i in range(n)}
        for i in range(n):
            coeffs[zo + i] = -1.0
        rows.append(LinearConstraint(coeffs, "<=", 0.0))
    for i in range(n):
        rows.append(LinearConstraint({zo + i: 1.0, xo + i: -1.0}, "<=", 0.0))
        rows.append(LinearConstraint({zo + i: 1.0, yo + i: -1.0}, "<=", 0.0))
    for i in range(n):
        coeffs = {yo + i: -1.0, pio: 1.0, uo + i: 1.0}
        for k, (ext, _) in enumerate(extra):
            if i in ext and ext[i] != 0.0:
                coeffs[wo + k] = ext[i]
        rows.append(LinearConstraint(coeffs, ">=", 0.0))

    obj = np.zeros(nv)
    obj[xo:yo] = inst.first_stage
    obj[yo:uo] = unc.nominal
    obj[uo:zo] = unc.deviation
    obj[pio] = unc.budget
    for k, (_, rhs) in enumerate(extra):
        obj[wo + k] = rhs

    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    upper[xo:yo] = 1.0
    upper[yo:uo] = 1.0
    upper[zo:pio] = 1.0
    lp = LpModel(sense="min", objective=obj, rows=tuple(rows), lower=lower, upper=upper)
    return MipModel(lp=lp, binary=tuple(range(n)))


def lb_selection(
    inst: Instance,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
) -> BoundValue:
    """Cardinality/kept-fraction relaxation lower bound (one MIP)."""
    res = mip_solve(
        selection_bound_model(inst), time_limit_s=time_limit_s, node_limit=node_limit
    )
    if res.status == MIP_OPTIMAL:
        return BoundValue(value=res.value, exact=True, status=res.status)
    # safe direction: the MIP's proven dual bound still under-estimates
    return BoundValue(value=res.best_bound, exact=False, status=res.status)


def _require_lagrangian_preconditions(inst: Instance) -> None:
    if not inst.feasible.integral_polytope:
        raise ValueError(
            "Lagrangian bound needs the integral-relaxation assertion "
            "(feasible.integral_polytope)"
        )
    if inst.feasible.equal_cardinality is None:
        raise ValueError("Lagrangian bound needs an equal-cardinality feasible set")


def lagrangian_bound_model(inst: Instance, mu: float) -> tuple[MipModel, float]:
    """Multiplier-priced bound MIP; returns (model, constant offset).

    The kept-element row is moved into the objective with weight ``mu``,
    which leaves the repair ranging over the (integral) relaxation of the
    feasible set; the inner adversary is dualized as in the selection
    bound.  Valid for every ``mu >= 0``.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    n = inst.n
    unc = inst.uncertainty
    extra = _leq_extra_rows(unc)
    ne = len(extra)
    xo, yo, zo, uo = 0, n, 2 * n, 3 * n
    pio = 4 * n
    wo = 4 * n + 1
    nv = wo + ne

    rows = list(inst.feasible.constraints)
    rows.extend(_core._shift_rows(inst.feasible.constraints, yo))
    for i in range(n):
        rows.append(LinearConstraint({zo + i: 1.0, xo + i: -1.0}, "<=", 0.0))
        rows.append(LinearConstraint({zo + i: 1.0, yo + i: -1.0}, "<=", 0.0))
    for i in range(n):
        coeffs = {yo + i: -1.0, pio: 1.0, uo + i: 1.0}
        for k, (ext, _) in enumerate(extra):
            if i in ext and ext[i] != 0.0:
                coeffs[wo + k] = ext[i]
        rows.append(LinearConstraint(coeffs, ">=", 0.0))

    obj = np.zeros(nv)
    obj[xo:yo] = inst.first_stage
    obj[yo:zo] = unc.nominal
    obj[zo:uo] = -mu
    obj[uo:pio] = unc.deviation
    obj[pio] = unc.budget
    for k, (_, rhs) in enumerate(extra):
        obj[wo + k] = rhs

    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    upper[xo:uo] = 1.0  # x, y and the product auxiliaries live in [0, 1]
    lp = LpModel(sense="min", objective=obj, rows=tuple(rows), lower=lower, upper=upper)
    return MipModel(lp=lp, binary=tuple(range(n))), mu * float(inst.overlap_floor())


def lb_lagrangian(
    inst: Instance,
    mu: float,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
) -> BoundValue:
    """Lagrangian lower bound at a fixed multiplier."""
    _require_lagrangian_preconditions(inst)
    model, offset = lagrangian_bound_model(inst, mu)
    res = mip_solve(model, time_limit_s=time_limit_s, node_limit=node_limit)
    if res.status == MIP_OPTIMAL:
        return BoundValue(value=res.value + offset, exact=True, status=res.status,
                          detail=mu)
    return BoundValue(value=res.best_bound + offset, exact=False, status=res.status,
                      detail=mu)


def lb_lagrangian_opt(
    inst: Instance,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
    mu_tol: float = GOLDEN_MU_TOL,
) -> BoundValue:
    """Golden-section search over the multiplier.

    The bound is concave in the multiplier, so the search is sound; any
    probe is already a valid lower bound, making accuracy a quality knob
    only.  The value returned is the best probe (mu=0 included).
    """
    _require_lagrangian_preconditions(inst)
    mu_max = float(np.max(inst.uncertainty.peak))
    cache: dict[float, BoundValue] = {}

    def probe(mu: float) -> float:
        if mu not in cache:
            cache[mu] = lb_lagrangian(
                inst, mu, time_limit_s=time_limit_s, node_limit=node_limit
            )
        return cache[mu].value

    probe(0.0)
    a, b = 0.0, mu_max
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = probe(x1), probe(x2)
    while b - a > mu_tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = probe(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = probe(x1)
    best_mu = max(cache, key=lambda k: cache[k].value)
    best = cache[best_mu]
    return BoundValue(
        value=best.value,
        exact=all(v.exact for v in cache.values()),
        status=best.status,
        detail=best_mu,
    )


def upper_bound(
    inst: Instance,
    time_limit_s: Optional[float] = None,
    node_limit: Optional[int] = None,
) -> UpperBoundResult:
    """min(rec(nominal) + budget, rec(peak)): two recoverable solves.

    Incumbent (non-proven) recoverable values still give a valid upper
    bound; the result is flagged partial only when a side produced no
    feasible pair at all.
    """
    unc = inst.uncertainty
    partial = False
    try:
        rec_n = _core.solve_recoverable(
            inst, unc.nominal, time_limit_s=time_limit_s, node_limit=node_limit
        )
    except RuntimeError:
        rec_n, partial = None, True
    try:
        rec_p = _core.solve_recoverable(
            inst, unc.peak, time_limit_s=time_limit_s, node_limit=node_limit
        )
    except RuntimeError:
        rec_p, partial = None, True
    terms = []
    if rec_n is not None:
        terms.append(rec_n.value + unc.budget)
    if rec_p is not None:
        terms.append(rec_p.value)
    return UpperBoundResult(
        ub=min(terms) if terms else np.inf,
        x_under=None if rec_n is None else rec_n.pair.x,
        x_over=None if rec_p is None else rec_p.pair.x,
        rec_nominal=rec_n,
        rec_peak=rec_p,
        partial=partial,
    )


@dataclass
class ChooseResult:
    x: np.ndarray
    bracket: Bracket
    which: str  # "nominal" | "peak"
    bracket_nominal: Bracket
    bracket_peak: Bracket


def choose_first_stage(
    inst: Instance,
    epsilon: float = _loop.DEFAULT_EPSILON,
    time_limit_s: Optional[float] = _loop.DEFAULT_TIME_LIMIT,
    max_iterations: Optional[int] = None,
) -> ChooseResult:
    """Evaluate both candidate first stages and keep the better one.

    Comparison uses the evaluation brackets' upper bounds (the sound side
    when a loop hit its limit); ties prefer the nominal-scenario stage.
    """
    ubr = upper_bound(inst, time_limit_s=time_limit_s)
    if ubr.x_under is None or ubr.x_over is None:
        raise RuntimeError("candidate first stages unavailable (solver limits)")
    br_n = _loop.eval_solution(
        inst, ubr.x_under, epsilon=epsilon, time_limit_s=time_limit_s,
        max_iterations=max_iterations,
    )
    br_p = _loop.eval_solution(
        inst, ubr.x_over, epsilon=epsilon, time_limit_s=time_limit_s,
        max_iterations=max_iterations,
    )
    if br_n.ub <= br_p.ub:
        return ChooseResult(ubr.x_under, br_n, "nominal", br_n, br_p)
    return ChooseResult(ubr.x_over, br_p, "peak", br_n, br_p)


def min_first_stage_cost(inst: Instance, time_limit_s: Optional[float] = None) -> float:
    """min C.x over the feasible set (one MIP)."""
    n = inst.n
    model = MipModel(
        lp=LpModel(
            sense="min",
            objective=inst.first_stage,
            rows=inst.feasible.constraints,
            lower=np.zeros(n),
            upper=np.ones(n),
        ),
        binary=tuple(range(n)),
    )
    res = mip_solve(model, time_limit_s=time_limit_s)
    if res.value is None:
        raise RuntimeError(f"first-stage MIP ended {res.status}")
    return res.value


def single_stage_maxmin(
    inst: Instance,
    epsilon: float,
    time_limit_s: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> Bracket:
    """Worst-case value of the best unconstrained solution.

    Runs the evaluation loop on a copy with zero first-stage costs and a
    fully open neighborhood, so the inner problem ranges over the whole
    feasible set.  The bracket's lower side is the safe estimate.
    """
    relaxed = Instance(
        feasible=inst.feasible,
        first_stage=np.zeros(inst.n),
        uncertainty=inst.uncertainty,
        alpha=1.0,
    )
    any_x = _core.solve_recoverable(relaxed, inst.uncertainty.nominal).pair.x
    return _loop.eval_solution(
        relaxed, any_x, epsilon=epsilon, time_limit_s=time_limit_s,
        max_iterations=max_iterations,
    )


# ---------------------------------------------------------------------------
# Ratio report
# ---------------------------------------------------------------------------

LB_METHODS = ("heuristic", "adversarial", "selection", "lagrangian")


@dataclass
class ReportConfig:
    epsilon: float = _loop.DEFAULT_EPSILON
    time_limit_s: Optional[float] = _loop.DEFAULT_TIME_LIMIT
    methods: tuple[str, ...] = LB_METHODS
    max_iterations: Optional[int] = None
    node_limit: Optional[int] = None
    lemmas: bool = True


@dataclass
class RatioReport:
    ub: float
    lb_by_method: dict[str, Optional[float]]
    rho_by_method: dict[str, Optional[float]]
    rho_c0: Optional[float]
    min_eval: float
    lemma_bounds: dict[str, Optional[float]]
    lemma1_rho: Optional[float]
    chosen_x: Optional[np.ndarray]
    timings: dict[str, float]
    errors: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ub": self.ub,
            "lb_by_method": dict(self.lb_by_method),
            "rho_by_method": dict(self.rho_by_method),
            "rho_c0": self.rho_c0,
            "min_eval": self.min_eval,
            "lemma_bounds": dict(self.lemma_bounds),
            "lemma1_rho": self.lemma1_rho,
            "chosen_x": None
            if self.chosen_x is None
            else [int(v) for v in self.chosen_x],
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
            "errors": dict(self.errors),
            "notes": list(self.notes),
        }


def _ratio(numerator: float, lb: Optional[float]) -> Optional[float]:
    if lb is None or not np.isfinite(numerator):
        return None
    if lb <= 1e-12:
        return None
    return numerator / lb


def lemma_bound_estimates(
    inst: Instance,
    rec0: Optional[_core.RecoverableResult],
    scenario0: Scenario,
    config: ReportConfig,
    notes: list[str],
) -> tuple[dict[str, Optional[float]], Optional[float]]:
    """Analytic ratio guarantees that apply to this instance's data."""
    unc = inst.uncertainty
    out: dict[str, Optional[float]] = {
        "lemma2_sigma": None,
        "lemma3_beta": None,
        "lemma4_beta": None,
        "lemma5_q": None,
    }

    lemma1 = None
    if rec0 is not None and rec0.status == MIP_OPTIMAL:
        xs, ys = rec0.pair.x, rec0.pair.y
        den = float(inst.first_stage @ xs + scenario0.costs @ ys)
        if den > 1e-12:
            num = min(
                float(inst.first_stage @ xs + unc.nominal @ ys) + unc.budget,
                float(inst.first_stage @ xs + unc.peak @ ys),
            )
            lemma1 = num / den

    if np.all(unc.nominal > 0):
        out["lemma2_sigma"] = float(np.max(unc.peak / unc.nominal))

    try:
        base = min_first_stage_cost(inst, time_limit_s=config.time_limit_s)
        maxmin = single_stage_maxmin(
            inst, config.epsilon, time_limit_s=config.time_limit_s,
            max_iterations=config.max_iterations,
        ).lb
        den = base + maxmin
        if den > 1e-12:
            out["lemma3_beta"] = 1.0 + unc.budget / den
        else:
            notes.append("lemma3: zero baseline cost, bound not applicable")
    except Exception as exc:  # bound is optional; report and continue
        notes.append(f"lemma3: {exc}")

    if unc.is_interval_budget_only:
        total_dev = float(unc.deviation.sum())
        if total_dev <= 1e-12:
            out["lemma4_beta"] = 1.0
        elif unc.budget > 0:
            out["lemma4_beta"] = max(1.0, total_dev / unc.budget)
        q = int(np.count_nonzero(unc.deviation > 0))
        bound5 = float(q + 1)
        m = inst.feasible.equal_cardinality
        if m is not None and np.all(unc.deviation >= unc.budget / inst.n - 1e-12):
            bound5 = min(bound5, 1.0 + inst.n / m)
        out["lemma5_q"] = bound5
    return out, lemma1


def ratio_report(inst: Instance, config: Optional[ReportConfig] = None) -> RatioReport:
    """Upper bound, configured lower bounds, empirical ratios, lemma bounds.

    Component failures are recorded per method and leave the rest of the
    report intact.
    """
    config = config or ReportConfig()
    unc = inst.uncertainty
    timings: dict[str, float] = {}
    errors: dict[str, str] = {}
    notes: list[str] = []
    lb: dict[str, Optional[float]] = {k: None for k in LB_METHODS}

    t0 = time.monotonic()
    ubr = upper_bound(inst, time_limit_s=config.time_limit_s,
                      node_limit=config.node_limit)
    timings["upper_bound"] = time.monotonic() - t0
    if ubr.partial:
        notes.append("upper bound partial: a recoverable solve produced no pair")

    t0 = time.monotonic()
    scenario0 = _loop.heuristic_scenario(unc)
    rec0 = None
    try:
        rec0 = _core.solve_recoverable(
            inst, scenario0, time_limit_s=config.time_limit_s,
            node_limit=config.node_limit,
        )
        lb["heuristic"] = rec0.value if rec0.status == MIP_OPTIMAL else rec0.bound
    except Exception as exc:
        errors["heuristic"] = str(exc)
    timings["heuristic"] = time.monotonic() - t0

    brackets = {}
    t0 = time.monotonic()
    min_eval = np.inf
    chosen_x = None
    try:
        for name, x in (("nominal", ubr.x_under), ("peak", ubr.x_over)):
            if x is None:
                continue
            brackets[name] = _loop.eval_solution(
                inst, x, epsilon=config.epsilon, time_limit_s=config.time_limit_s,
                c_init=scenario0, max_iterations=config.max_iterations,
            )
        if brackets:
            order = [n for n in ("nominal", "peak") if n in brackets]
            pick = min(order, key=lambda n: brackets[n].ub)
            chosen_x = ubr.x_under if pick == "nominal" else ubr.x_over
            min_eval = min(br.ub for br in brackets.values())
    except Exception as exc:
        errors["eval"] = str(exc)
    timings["eval"] = time.monotonic() - t0

    if "adversarial" in config.methods:
        t0 = time.monotonic()
        try:
            adv = _loop.adversarial_lb(
                inst, epsilon=config.epsilon, time_limit_s=config.time_limit_s,
                max_iterations=config.max_iterations,
            )
            lb["adversarial"] = adv.lb
        except Exception as exc:
            errors["adversarial"] = str(exc)
        timings["adversarial"] = time.monotonic() - t0

    if "selection" in config.methods:
        t0 = time.monotonic()
        try:
            sel = lb_selection(inst, time_limit_s=config.time_limit_s,
                               node_limit=config.node_limit)
            lb["selection"] = sel.value
            if not sel.exact:
                notes.append("selection bound is the MIP dual bound (limit hit)")
        except Exception as exc:
            errors["selection"] = str(exc)
        timings["selection"] = time.monotonic() - t0

    if "lagrangian" in config.methods:
        t0 = time.monotonic()
        try:
            lag = lb_lagrangian_opt(inst, time_limit_s=config.time_limit_s,
                                    node_limit=config.node_limit)
            lb["lagrangian"] = lag.value
        except ValueError as exc:
            notes.append(f"lagrangian: {exc}")
        except Exception as exc:
            errors["lagrangian"] = str(exc)
        timings["lagrangian"] = time.monotonic() - t0

    lemma_bounds = {k: None for k in ("lemma2_sigma", "lemma3_beta",
                                      "lemma4_beta", "lemma5_q")}
    lemma1 = None
    if config.lemmas:
        t0 = time.monotonic()
        lemma_bounds, lemma1 = lemma_bound_estimates(
            inst, rec0, scenario0, config, notes
        )
        notes.append("lemma3 inner value estimated by a generation loop")
        timings["lemmas"] = time.monotonic() - t0

    rho = {k: _ratio(min_eval, lb[k]) for k in LB_METHODS}
    rho_c0 = _ratio(ubr.ub, lb["heuristic"])
    return RatioReport(
        ub=ubr.ub,
        lb_by_method=lb,
        rho_by_method=rho,
        rho_c0=rho_c0,
        min_eval=min_eval,
        lemma_bounds=lemma_bounds,
        lemma1_rho=lemma1,
        chosen_x=chosen_x,
        timings=timings,
        errors=errors,
        notes=notes,
    )
