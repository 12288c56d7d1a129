"""Reproducible experiment pipeline over the assignment/knapsack families.

A run sweeps a grid of recovery fractions, generates a fixed number of
random instances per cell, computes the configured bound metrics for each
instance, and writes per-alpha averages as CSV.

Reproducibility contract: for a fixed (seed, family, size, flags) the
value CSV is byte-identical across runs.  All solver budgets are
therefore expressed as deterministic node/iteration caps; wall-clock
limits are an optional safety belt that is off by default (a run that
hits one is flagged in the ``partial`` column).  Wall-clock measurements
go to a separate timings CSV that is naturally not byte-stable.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bounds as _bounds
from . import core_solvers as _core
from . import cut_loop as _loop
from .mip_kernel import MIP_OPTIMAL
from .problems import gen_random_assignment, gen_random_knapsack

DEFAULT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))

VALUE_COLUMNS = (
    "family",
    "size",
    "alpha",
    "instances",
    "epsilon",
    "metrics",
    "timeout_mode",
    "avg_rho_c0",
    "avg_rho_h",
    "avg_rho_adv",
    "avg_rho_sel",
    "avg_rho_lag",
    "avg_rho_best",
    "lag_success",
    "partial_cells",
)

TIMING_COLUMNS = (
    "family",
    "size",
    "alpha",
    "t_rho0_avg",
    "t_eval_avg",
    "t_adv_avg",
    "t_sel_avg",
    "t_lag_avg",
    "t_total_avg",
)


@dataclass(frozen=True)
class ExperimentConfig:
    family: str  # "assignment" | "knapsack"
    size: int
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    instances_per_cell: int = 10
    seed: int = 0
    epsilon: float = 0.01
    metrics: str = "full"  # "rho0" computes only the two-solve ratio
    workers: int = 1
    time_limit_s: Optional[float] = None  # per-component belt, off by default
    timeout_mode: str = "capped"  # "capped" | "censored"
    # deterministic per-solve budgets (None means exact)
    rec_node_limit: Optional[int] = None
    rec_gap_target: float = 0.0
    eval_max_iterations: Optional[int] = None
    eval_inner_node_limit: Optional[int] = None
    eval_inner_gap_target: float = 0.0
    adv_max_iterations: Optional[int] = None
    adv_inner_node_limit: Optional[int] = None
    adv_inner_gap_target: float = 0.0
    sel_node_limit: Optional[int] = None
    lag_node_limit: Optional[int] = None
    include_lagrangian: Optional[bool] = None  # default: equal-cardinality family

    def __post_init__(self):
        if self.family not in ("assignment", "knapsack"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.metrics not in ("full", "rho0"):
            raise ValueError(f"unknown metrics mode {self.metrics!r}")
        if self.timeout_mode not in ("capped", "censored"):
            raise ValueError(f"unknown timeout mode {self.timeout_mode!r}")

    @property
    def lagrangian_enabled(self) -> bool:
        if self.include_lagrangian is not None:
            return self.include_lagrangian
        return self.family == "assignment"


def desk_scale_config(family: str, size: int, **overrides) -> ExperimentConfig:
    """Budget profile tuned for single-machine runs at moderate sizes."""
    if family == "assignment":
        base = dict(
            rec_node_limit=2000,
            rec_gap_target=1e-4,
            eval_max_iterations=60,
            eval_inner_node_limit=4000,
            adv_max_iterations=6,
            adv_inner_node_limit=1500,
            adv_inner_gap_target=1e-3,
            sel_node_limit=4000,
            lag_node_limit=1500,
        )
    else:
        base = dict(
            rec_node_limit=300,
            rec_gap_target=3e-3,
            eval_max_iterations=60,
            eval_inner_node_limit=400,
            eval_inner_gap_target=1e-2,
            adv_max_iterations=2,
            adv_inner_node_limit=300,
            adv_inner_gap_target=3e-3,
            sel_node_limit=1200,
            lag_node_limit=None,
        )
    base.update(overrides)
    return ExperimentConfig(family=family, size=size, **base)


def _make_instance(config: ExperimentConfig, alpha: float, a_idx: int, i_idx: int):
    seed = (config.seed, a_idx, i_idx)
    # stable scalar stream id per cell
    cell_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
    if config.family == "assignment":
        return gen_random_assignment(config.size, cell_seed, alpha=alpha)
    return gen_random_knapsack(config.size, cell_seed, alpha=alpha)


@dataclass
class CellResult:
    alpha: float
    rho_c0: Optional[float] = None
    rho_h: Optional[float] = None
    rho_adv: Optional[float] = None
    rho_sel: Optional[float] = None
    rho_lag: Optional[float] = None
    rho_best: Optional[float] = None
    lag_ok: bool = False
    partial: bool = False
    timings: dict = field(default_factory=dict)


def _safe_lb(res: _core.RecoverableResult) -> float:
    return res.value if res.status == MIP_OPTIMAL else res.bound


def run_cell(config: ExperimentConfig, alpha: float, a_idx: int, i_idx: int) -> CellResult:
    """All metrics for one (alpha, instance) cell."""
    inst = _make_instance(config, alpha, a_idx, i_idx)
    unc = inst.uncertainty
    out = CellResult(alpha=alpha)
    tl = config.time_limit_s

    t0 = time.monotonic()
    try:
        rec_n = _core.solve_recoverable(
            inst, unc.nominal, time_limit_s=tl,
            node_limit=config.rec_node_limit, gap_target=config.rec_gap_target,
        )
        rec_p = _core.solve_recoverable(
            inst, unc.peak, time_limit_s=tl,
            node_limit=config.rec_node_limit, gap_target=config.rec_gap_target,
        )
        scenario0 = _loop.heuristic_scenario(unc)
        rec_0 = _core.solve_recoverable(
            inst, scenario0, time_limit_s=tl,
            node_limit=config.rec_node_limit, gap_target=config.rec_gap_target,
        )
    except RuntimeError:
        out.timings["rho0"] = time.monotonic() - t0
        out.partial = True
        return out
    ub = min(rec_n.value + unc.budget, rec_p.value)
    lb_h = _safe_lb(rec_0)
    out.timings["rho0"] = time.monotonic() - t0
    if lb_h > 1e-12:
        out.rho_c0 = ub / lb_h
    if config.metrics == "rho0":
        return out

    t0 = time.monotonic()
    brackets = []
    for xcand in (rec_n.pair.x, rec_p.pair.x):
        brackets.append(
            _loop.eval_solution(
                inst, xcand, epsilon=config.epsilon, time_limit_s=tl,
                c_init=scenario0, max_iterations=config.eval_max_iterations,
                inner_node_limit=config.eval_inner_node_limit,
                inner_gap_target=config.eval_inner_gap_target,
            )
        )
    min_eval = min(br.ub for br in brackets)
    out.timings["eval"] = time.monotonic() - t0

    t0 = time.monotonic()
    adv = _loop.adversarial_lb(
        inst, epsilon=config.epsilon, time_limit_s=tl,
        max_iterations=config.adv_max_iterations,
        inner_node_limit=config.adv_inner_node_limit,
        inner_gap_target=config.adv_inner_gap_target,
        initial_rec=rec_0,
    )
    lb_adv = adv.lb
    out.timings["adv"] = time.monotonic() - t0

    t0 = time.monotonic()
    sel = _bounds.lb_selection(inst, time_limit_s=tl, node_limit=config.sel_node_limit)
    out.timings["sel"] = time.monotonic() - t0

    lb_lag = None
    if config.lagrangian_enabled:
        t0 = time.monotonic()
        try:
            lag = _bounds.lb_lagrangian_opt(
                inst, time_limit_s=tl, node_limit=config.lag_node_limit
            )
            lb_lag = lag.value
            out.lag_ok = True
        except (ValueError, RuntimeError):
            lb_lag = None
        out.timings["lag"] = time.monotonic() - t0

    def ratio(lb: Optional[float]) -> Optional[float]:
        if lb is None or lb <= 1e-12 or not np.isfinite(min_eval):
            return None
        return min_eval / lb

    out.rho_h = ratio(lb_h)
    out.rho_adv = ratio(lb_adv)
    out.rho_sel = ratio(sel.value)
    out.rho_lag = ratio(lb_lag)
    best_lb = max(v for v in (lb_h, lb_adv, sel.value, lb_lag) if v is not None)
    out.rho_best = ratio(best_lb)
    return out


def _run_cell_packed(args) -> tuple[int, int, CellResult]:
    config, alpha, a_idx, i_idx = args
    return a_idx, i_idx, run_cell(config, alpha, a_idx, i_idx)


def _fmt(v: Optional[float]) -> str:
    if v is None:
        return ""
    return format(v, ".9g")


def run_experiment(config: ExperimentConfig) -> tuple[str, str]:
    """Run the sweep; returns (values_csv, timings_csv) as text."""
    cells = [
        (config, alpha, a_idx, i_idx)
        for a_idx, alpha in enumerate(config.alphas)
        for i_idx in range(config.instances_per_cell)
    ]
    results: dict[tuple[int, int], CellResult] = {}
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for a_idx, i_idx, res in pool.map(_run_cell_packed, cells):
                results[(a_idx, i_idx)] = res
    else:
        for args in cells:
            a_idx, i_idx, res = _run_cell_packed(args)
            results[(a_idx, i_idx)] = res

    values = io.StringIO()
    timings = io.StringIO()
    values.write(",".join(VALUE_COLUMNS) + "\n")
    timings.write(",".join(TIMING_COLUMNS) + "\n")

    def avg(seq) -> Optional[float]:
        vals = [v for v in seq if v is not None]
        return sum(vals) / len(vals) if vals else None

    for a_idx, alpha in enumerate(config.alphas):
        cell_res = [results[(a_idx, i)] for i in range(config.instances_per_cell)]
        used = [r for r in cell_res if not (config.timeout_mode == "censored" and r.partial)]
        row = [
            config.family,
            str(config.size),
            _fmt(alpha),
            str(len(used)),
            _fmt(config.epsilon),
            config.metrics,
            config.timeout_mode,
            _fmt(avg(r.rho_c0 for r in used)),
            _fmt(avg(r.rho_h for r in used)),
            _fmt(avg(r.rho_adv for r in used)),
            _fmt(avg(r.rho_sel for r in used)),
            _fmt(avg(r.rho_lag for r in used)),
            _fmt(avg(r.rho_best for r in used)),
            str(sum(1 for r in cell_res if r.lag_ok)),
            str(sum(1 for r in cell_res if r.partial)),
        ]
        values.write(",".join(row) + "\n")
        trow = [
            config.family,
            str(config.size),
            _fmt(alpha),
            _fmt(avg(r.timings.get("rho0") for r in cell_res)),
            _fmt(avg(r.timings.get("eval") for r in cell_res)),
            _fmt(avg(r.timings.get("adv") for r in cell_res)),
            _fmt(avg(r.timings.get("sel") for r in cell_res)),
            _fmt(avg(r.timings.get("lag") for r in cell_res)),
            _fmt(avg(sum(r.timings.values()) for r in cell_res)),
        ]
        timings.write(",".join(trow) + "\n")
    return values.getvalue(), timings.getvalue()


# ---------------------------------------------------------------------------
# Plot script emission
# ---------------------------------------------------------------------------

_RATIO_COLUMNS = ("avg_rho_c0", "avg_rho_h", "avg_rho_adv", "avg_rho_sel",
                  "avg_rho_lag", "avg_rho_best")
_TIME_COLUMNS = ("t_rho0_avg", "t_eval_avg", "t_adv_avg", "t_sel_avg", "t_lag_avg")


def plot_script(values_csv_path: str, timings_csv_path: Optional[str] = None) -> str:
    """Standalone gnuplot script drawing ratio-vs-alpha and time-vs-alpha."""
    with open(values_csv_path, "r", encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        has_data = bool(fh.readline().strip())
    header = header_line.split(",")
    if "alpha" not in header or not has_data:
        raise ValueError(f"{values_csv_path} is not an experiment values CSV")
    a_col = header.index("alpha") + 1

    lines = [
        "# generated by robrec plot-script",
        "set datafile separator ','",
        "set key outside",
        "set xlabel 'alpha'",
        "set term pngcairo size 900,600",
        "",
        "set output 'ratios.png'",
        "set ylabel 'ratio'",
    ]
    plots = []
    for name in _RATIO_COLUMNS:
        if name in header:
            col = header.index(name) + 1
            plots.append(
                f"'{values_csv_path}' every ::1 using {a_col}:{col} "
                f"with linespoints title '{name}'"
            )
    lines.append("plot \\")
    lines.append(", \\\n".join("    " + p for p in plots))

    if timings_csv_path is not None:
        with open(timings_csv_path, "r", encoding="utf-8") as fh:
            theader = fh.readline().strip().split(",")
        if "alpha" not in theader:
            raise ValueError(f"{timings_csv_path} is not a timings CSV")
        ta_col = theader.index("alpha") + 1
        tplots = [
            f"'{timings_csv_path}' every ::1 using {ta_col}:{theader.index(n) + 1} "
            f"with linespoints title '{n}'"
            for n in _TIME_COLUMNS
            if n in theader
        ]
        lines += [
            "",
            "set output 'times.png'",
            "set ylabel 'seconds'",
            "plot \\",
            ", \\\n".join("    " + p for p in tplots),
        ]
    return "\n".join(lines) + "\n"
