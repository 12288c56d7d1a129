"""Command line front end.

Exit codes: 0 success, 1 usage error (unknown subcommand, bad flags),
2 instance validation/parse error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from typing import Optional

import numpy as np

from . import __version__
from . import bounds as _bounds
from . import core_solvers as _core
from . import cut_loop as _loop
from . import experiment as _exp
from . import model as _model
from . import oracle as _oracle
from .lp_kernel import NumericalFailure

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(path: Optional[str]) -> _model.Instance:
    if not path:
        raise CliError("--instance is required", EXIT_USAGE)
    try:
        return _model.load_instance(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", EXIT_VALIDATION) from None
    except _model.InstanceValidationError as exc:
        raise CliError(f"invalid instance: {exc}", EXIT_VALIDATION) from None
    except _model.InstanceFormatError as exc:
        raise CliError(f"cannot parse instance: {exc}", EXIT_VALIDATION) from None


def _parse_vector(text: str, n: int, what: str) -> np.ndarray:
    try:
        vec = np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise CliError(f"cannot parse {what}: {text!r}", EXIT_USAGE) from None
    if vec.shape[0] != n:
        raise CliError(f"{what} has {vec.shape[0]} entries, expected {n}", EXIT_USAGE)
    return vec


def _parse_costs(inst: _model.Instance, text: str) -> np.ndarray:
    unc = inst.uncertainty
    if text == "nominal":
        return unc.nominal
    if text == "peak":
        return unc.peak
    if text == "heuristic":
        return _loop.heuristic_scenario(unc).costs
    return _parse_vector(text, inst.n, "--costs")


def _bracket_dict(br: _model.Bracket) -> dict:
    return {
        "lb": br.lb,
        "ub": br.ub,
        "status": br.status,
        "iterations": br.iterations,
        "elapsed_seconds": round(br.elapsed_seconds, 6),
        "witness_scenario": None
        if br.witness_scenario is None
        else [float(v) for v in br.witness_scenario.costs],
        "witness_solution": None
        if br.witness_solution is None
        else [int(v) for v in br.witness_solution],
    }


def _emit(args, payload: dict) -> None:
    if getattr(args, "format", "json") == "csv":
        flat = _flatten(payload)
        text = ",".join(flat.keys()) + "\n" + ",".join(str(v) for v in flat.values()) + "\n"
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(payload: dict, prefix: str = "") -> dict:
    out = {}
    for key, val in payload.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, f"{name}."))
        elif isinstance(val, list):
            out[name] = ";".join(str(v) for v in val)
        else:
            out[name] = val
    return out


def _time_limit(args) -> Optional[float]:
    return None if args.time_limit <= 0 else args.time_limit


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        inst = _model.load_instance(args.instance)
    except _model.InstanceValidationError as exc:
        _emit(args, {"command": "validate", "valid": False, "violations": exc.violations})
        return EXIT_VALIDATION
    except (FileNotFoundError, _model.InstanceFormatError) as exc:
        _emit(args, {"command": "validate", "valid": False, "violations": [str(exc)]})
        return EXIT_VALIDATION
    _emit(args, {"command": "validate", "valid": True, "n": inst.n})
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "assignment":
        inst = _exp.gen_random_assignment(args.size, args.seed, alpha=args.alpha)
    elif args.family == "knapsack":
        inst = _exp.gen_random_knapsack(args.size, args.seed, alpha=args.alpha)
    else:
        raise CliError(f"unknown family {args.family!r}", EXIT_USAGE)
    if args.out:
        _model.save_instance(inst, args.out)
    else:
        sys.stdout.write(_model.instance_to_json(inst))
    return EXIT_OK


def cmd_inc(args) -> int:
    inst = _load(args.instance)
    x = _parse_vector(args.x, inst.n, "--x")
    costs = _parse_costs(inst, args.costs)
    res = _core.solve_incremental(inst, x, costs, time_limit_s=_time_limit(args))
    _emit(args, {
        "command": "inc",
        "value": res.value,
        "bound": res.bound,
        "status": res.status,
        "y": [int(v) for v in res.y],
    })
    return EXIT_OK


def cmd_rec(args) -> int:
    inst = _load(args.instance)
    costs = _parse_costs(inst, args.costs)
    res = _core.solve_recoverable(inst, costs, time_limit_s=_time_limit(args))
    _emit(args, {
        "command": "rec",
        "value": res.value,
        "bound": res.bound,
        "status": res.status,
        "x": [int(v) for v in res.pair.x],
        "y": [int(v) for v in res.pair.y],
    })
    return EXIT_OK


def cmd_eval(args) -> int:
    inst = _load(args.instance)
    x = _parse_vector(args.x, inst.n, "--x")
    br = _loop.eval_solution(
        inst, x, epsilon=args.epsilon, time_limit_s=_time_limit(args)
    )
    _emit(args, {"command": "eval", "value": br.ub, **_bracket_dict(br)})
    return EXIT_OK


def cmd_adv(args) -> int:
    inst = _load(args.instance)
    br = _loop.adversarial_lb(
        inst, epsilon=args.epsilon, time_limit_s=_time_limit(args)
    )
    _emit(args, {"command": "adv", "value": br.lb, **_bracket_dict(br)})
    return EXIT_OK


def cmd_lb(args) -> int:
    inst = _load(args.instance)
    tl = _time_limit(args)
    if args.method == "heuristic":
        value = _loop.lb_heuristic(inst, time_limit_s=tl)
        payload = {"value": value}
    elif args.method == "adversarial":
        br = _loop.adversarial_lb(inst, epsilon=args.epsilon, time_limit_s=tl)
        payload = {"value": br.lb, **_bracket_dict(br)}
    elif args.method == "selection":
        res = _bounds.lb_selection(inst, time_limit_s=tl)
        payload = {"value": res.value, "exact": res.exact, "status": res.status}
    elif args.method == "lagrangian":
        try:
            res = _bounds.lb_lagrangian_opt(inst, time_limit_s=tl)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_VALIDATION) from None
        payload = {"value": res.value, "exact": res.exact, "mu": res.detail}
    else:
        raise CliError(f"unknown method {args.method!r}", EXIT_USAGE)
    _emit(args, {"command": "lb", "method": args.method, **payload})
    return EXIT_OK


def cmd_ub(args) -> int:
    inst = _load(args.instance)
    res = _bounds.upper_bound(inst, time_limit_s=_time_limit(args))
    _emit(args, {
        "command": "ub",
        "value": res.ub,
        "partial": res.partial,
        "x_under": None if res.x_under is None else [int(v) for v in res.x_under],
        "x_over": None if res.x_over is None else [int(v) for v in res.x_over],
    })
    return EXIT_OK


def cmd_choose_x(args) -> int:
    inst = _load(args.instance)
    res = _bounds.choose_first_stage(
        inst, epsilon=args.epsilon, time_limit_s=_time_limit(args)
    )
    _emit(args, {
        "command": "choose-x",
        "x": [int(v) for v in res.x],
        "which": res.which,
        "eval": _bracket_dict(res.bracket),
    })
    return EXIT_OK


def cmd_ratio(args) -> int:
    inst = _load(args.instance)
    config = _bounds.ReportConfig(epsilon=args.epsilon, time_limit_s=_time_limit(args))
    report = _bounds.ratio_report(inst, config)
    _emit(args, {"command": "ratio", **report.to_dict()})
    return EXIT_OK


def cmd_experiment(args) -> int:
    alphas = tuple(float(a) for a in args.alphas.split(","))
    overrides = dict(
        alphas=alphas,
        instances_per_cell=args.cells,
        seed=args.seed,
        epsilon=args.epsilon,
        metrics=args.metrics,
        workers=args.workers,
        time_limit_s=_time_limit(args),
        timeout_mode=args.timeout_mode,
    )
    if args.profile == "desk":
        config = _exp.desk_scale_config(args.family, args.size, **overrides)
    else:
        config = _exp.ExperimentConfig(family=args.family, size=args.size, **overrides)
    values, timings = _exp.run_experiment(config)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(values)
    else:
        sys.stdout.write(values)
    timings_path = args.timings_out or (args.out + ".timings.csv" if args.out else None)
    if timings_path:
        with open(timings_path, "w", encoding="utf-8") as fh:
            fh.write(timings)
    return EXIT_OK


def cmd_plot_script(args) -> int:
    try:
        text = _exp.plot_script(args.csv, args.timings_csv)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot build plot script: {exc}", EXIT_VALIDATION) from None
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _fixture_path(name: str):
    return resources.files("robrec") / "fixtures" / name


def cmd_check(args) -> int:
    """Oracle-equivalence smoke suite over the bundled fixtures."""
    failures: list[str] = []

    def expect(cond: bool, msg: str):
        if not cond:
            failures.append(msg)

    for name in ("toy3.json", "counterexample.json", "knap3.json"):
        inst = _model.instance_from_json(_fixture_path(name).read_text())
        opt, x_opt = _oracle.brute_robrec(inst)
        for x in _oracle.enumerate_feasible(inst.feasible):
            br = _loop.eval_solution(inst, x, epsilon=0.0, time_limit_s=60.0)
            ref = _oracle.brute_eval(inst, x)
            expect(abs(br.ub - ref) <= 1e-6 * (1 + abs(ref)),
                   f"{name}: eval mismatch at {x}: {br.ub} vs {ref}")
        adv = _loop.adversarial_lb(inst, epsilon=1e-9, time_limit_s=60.0)
        expect(adv.lb <= opt + 1e-6, f"{name}: adversarial bound above optimum")
        ubr = _bounds.upper_bound(inst)
        expect(ubr.ub >= opt - 1e-6, f"{name}: upper bound below optimum")
        for costs in (inst.uncertainty.nominal, inst.uncertainty.peak):
            ref, _ = _oracle.brute_rec(inst, costs)
            got = _core.solve_recoverable(inst, costs).value
            expect(abs(got - ref) <= 1e-9, f"{name}: recoverable mismatch")

    payload = {"command": "check", "ok": not failures, "failures": failures}
    _emit(args, payload)
    return EXIT_OK if not failures else EXIT_SOLVER


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robrec",
        description="Robust recoverable 0-1 optimization toolkit",
    )
    parser.add_argument("--version", action="version", version=f"robrec {__version__}")
    sub = parser.add_subparsers(dest="command")

    def common(p, instance=True):
        if instance:
            p.add_argument("--instance", help="instance JSON path")
        p.add_argument("--epsilon", type=float, default=0.01)
        p.add_argument("--time-limit", type=float, default=600.0,
                       help="seconds per component; 0 disables")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    common(sub.add_parser("validate", help="parse and validate an instance"))

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--family", required=True, choices=("assignment", "knapsack"))
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out")

    p = sub.add_parser("inc", help="incremental solve for a fixed first stage")
    common(p)
    p.add_argument("--x", required=True, help="comma-separated 0/1 vector")
    p.add_argument("--costs", default="nominal",
                   help="nominal | peak | heuristic | comma list")

    p = sub.add_parser("rec", help="recoverable solve under fixed costs")
    common(p)
    p.add_argument("--costs", default="nominal")

    p = sub.add_parser("eval", help="worst-case evaluation of a first stage")
    common(p)
    p.add_argument("--x", required=True)

    common(sub.add_parser("adv", help="adversarial lower bound"))

    p = sub.add_parser("lb", help="a single lower bound")
    common(p)
    p.add_argument("--method", required=True,
                   choices=("heuristic", "adversarial", "selection", "lagrangian"))

    common(sub.add_parser("ub", help="two-solve upper bound"))
    common(sub.add_parser("choose-x", help="pick the better candidate first stage"))
    common(sub.add_parser("ratio", help="full bound/ratio report"))

    p = sub.add_parser("experiment", help="random-instance sweep with CSV output")
    p.add_argument("--family", required=True, choices=("assignment", "knapsack"))
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--alphas", default=",".join(str(a) for a in _exp.DEFAULT_ALPHAS))
    p.add_argument("--cells", type=int, default=10, help="instances per alpha")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--time-limit", type=float, default=600.0)
    p.add_argument("--metrics", choices=("full", "rho0"), default="full")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--profile", choices=("desk", "exact"), default="desk")
    p.add_argument("--timeout-mode", choices=("capped", "censored"), default="capped")
    p.add_argument("--out")
    p.add_argument("--timings-out")

    p = sub.add_parser("plot-script", help="emit a gnuplot script for a results CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--timings-csv")
    p.add_argument("--out")

    common(sub.add_parser("check", help="oracle-equivalence suite on bundled fixtures"))
    return parser


_HANDLERS = {
    "validate": cmd_validate,
    "gen": cmd_gen,
    "inc": cmd_inc,
    "rec": cmd_rec,
    "eval": cmd_eval,
    "adv": cmd_adv,
    "lb": cmd_lb,
    "ub": cmd_ub,
    "choose-x": cmd_choose_x,
    "ratio": cmd_ratio,
    "experiment": cmd_experiment,
    "plot-script": cmd_plot_script,
    "check": cmd_check,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; fold into our usage code
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (NumericalFailure, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
