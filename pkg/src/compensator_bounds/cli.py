"""Command-line entry point.

Subcommands map one-to-one onto the library modules: ``bound`` and
``solve-recursion`` for the scalar bound, ``solve-bellman`` and
``compare`` for the exact control values, ``test-shift`` for the
inequality scan, ``simulate`` for the chains, and ``report`` for a
combined battery with CI-friendly exit codes.

Every subcommand prints one JSON document to stdout (also written to
``--json PATH`` when given) and, where a tabular trace exists, writes it
as CSV via ``--csv PATH``.  Identical argv and seed give byte-identical
outputs: keys are sorted, floats use ``repr``, and nothing is stamped
with times or hostnames.

Exit codes: 0 = ran and all internal consistency checks passed, 2 =
usage error, 3 = a consistency check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .bellman import (
    GridConfig,
    compare_bounds,
    extremal_policy,
    grid_error_budget,
    value_iteration,
    ValueTable,
)
from .chains import (
    exact_expectation,
    extremal_chain_law,
    intro_chain_law,
    policy_schedule,
    simulate_extremal,
    simulate_intro,
)
from .functions import FunctionSpec, is_class_s_family, parse_function_spec
from .recursion import (
    DEFAULT_CONFIG,
    RecursionStatus,
    SolverConfig,
    fixed_point_bound,
    iterate,
)
from .shift import property_scan

__all__ = ["main", "parse_args", "run_report"]

ARTIFACT_FORMAT = "compensator-bounds/value-table-v1"


# ----------------------------------------------------------------------
# argument plumbing


def _function_arg(text: str) -> FunctionSpec:
    try:
        return parse_function_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _step_arg(text: str) -> float:
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            value = float(num) / float(den)
        else:
            value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(
            f"could not parse grid step '{text}'") from exc
    if value <= 0.0:
        raise argparse.ArgumentTypeError("grid step must be > 0")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive count, got {value}")
    return value


def parse_args(argv=None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="seed for every random draw (default 0)")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="cap on worker parallelism (the numerics are "
                             "vectorized in-process, so this is an upper "
                             "bound, not a demand)")
    common.add_argument("--json", metavar="PATH",
                        help="also write the JSON document to this file")
    common.add_argument("--csv", metavar="PATH",
                        help="write the tabular trace to this file")

    parser = argparse.ArgumentParser(
        prog="compensator-bounds",
        description="Bounds on compensator growth for [0,1]-bounded "
                    "submartingales: recursive and fixed-point bounds, "
                    "exact control values, inequality scans, and chain "
                    "simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser(
        "bound", parents=[common],
        help="fixed-point bound on the limiting growth, with cross-check")
    p_bound.add_argument("--f", type=_function_arg, required=True,
                         metavar="SPEC", help="function spec, e.g. "
                         "exp:lambda=0.5, pow:m=2, quad, remark2")

    p_rec = sub.add_parser(
        "solve-recursion", parents=[common],
        help="iterate the one-step recursion from f(0)")
    p_rec.add_argument("--f", type=_function_arg, required=True,
                       metavar="SPEC")
    p_rec.add_argument("--tol", type=float, default=DEFAULT_CONFIG.b_tolerance,
                       help="convergence tolerance on successive values")
    p_rec.add_argument("--max-iter", type=_positive_int,
                       default=DEFAULT_CONFIG.max_iterations)

    p_bell = sub.add_parser(
        "solve-bellman", parents=[common],
        help="value iteration on the y-grid; the JSON artifact carries "
             "the maximizing increments and can drive 'simulate'")
    p_bell.add_argument("--f", type=_function_arg, required=True,
                        metavar="SPEC")
    p_bell.add_argument("--horizon", type=_positive_int, required=True)
    p_bell.add_argument("--step", type=_step_arg, default="1/512",
                        help="grid spacing, a float or fraction like 1/512")
    p_bell.add_argument("--y-max", type=float, default=None,
                        help="grid top (default: the horizon)")
    p_bell.add_argument("--opt-grid", type=_positive_int,
                        default=DEFAULT_CONFIG.opt_grid_points,
                        help="coarse points for the per-state maximization")
    p_bell.add_argument("--refine", type=int,
                        default=DEFAULT_CONFIG.refine_iters,
                        help="golden-section refinement iterations")

    p_cmp = sub.add_parser(
        "compare", parents=[common],
        help="exact values against the recursion, step by step")
    p_cmp.add_argument("--f", type=_function_arg, required=True,
                       metavar="SPEC")
    p_cmp.add_argument("--horizon", type=_positive_int, required=True)
    p_cmp.add_argument("--step", type=_step_arg, default="1/512")

    p_shift = sub.add_parser(
        "test-shift", parents=[common],
        help="randomized scan for shift-inequality violations")
    p_shift.add_argument("--f", type=_function_arg, required=True,
                         metavar="SPEC")
    p_shift.add_argument("--trials", type=_positive_int, default=1000)
    p_shift.add_argument("--max-atoms", type=_positive_int, default=5)
    p_shift.add_argument("--value-cap", type=float, default=4.0)
    p_shift.add_argument("--report", metavar="PATH",
                         help="write the scan report JSON to this file")

    p_sim = sub.add_parser(
        "simulate", parents=[common],
        help="Monte-Carlo chains; --csv dumps paths as "
             "path_id,k,X,Y,M rows")
    p_sim.add_argument("--chain", choices=("intro", "extremal"),
                       required=True)
    p_sim.add_argument("--f", type=_function_arg, required=True,
                       metavar="SPEC")
    p_sim.add_argument("--n", type=_positive_int, default=None,
                       help="steps of the doubling chain (intro only)")
    p_sim.add_argument("--paths", type=_positive_int, default=10_000)
    p_sim.add_argument("--policy", metavar="PATH",
                       help="value-table artifact from solve-bellman "
                            "(extremal only)")
    p_sim.add_argument("--horizon", type=_positive_int, default=None,
                       help="steps of the table-driven chain; defaults to "
                            "the artifact horizon (extremal only)")
    p_sim.add_argument("--dump-paths", type=_positive_int, default=100,
                       help="number of paths written to --csv")

    p_rep = sub.add_parser(
        "report", parents=[common],
        help="combined battery: bound, recursion, comparison, shift "
             "scan, chain cross-check")
    p_rep.add_argument("--f", type=_function_arg, required=True,
                       metavar="SPEC")
    p_rep.add_argument("--horizon", type=_positive_int, default=20)
    p_rep.add_argument("--step", type=_step_arg, default="1/512")
    p_rep.add_argument("--trials", type=_positive_int, default=1000)

    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = os.cpu_count() or 1

    if args.csv is not None and args.command in ("bound", "test-shift"):
        parser.error(f"--csv is not supported for '{args.command}'")
    if args.command == "simulate":
        if args.chain == "intro" and args.n is None:
            parser.error("--n is required for --chain intro")
        if args.chain == "extremal" and args.policy is None:
            parser.error("--policy is required for --chain extremal")
    return args


# ----------------------------------------------------------------------
# output plumbing


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2,
                      separators=(",", ": ")) + "\n"


def _emit(payload: dict, json_path: str | None,
          extra_paths: tuple[str, ...] = ()) -> None:
    text = _dump_json(payload)
    sys.stdout.write(text)
    for path in (json_path, *extra_paths):
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _bound_value(value: float) -> float | str:
    return "unbounded" if np.isinf(value) else float(value)


# ----------------------------------------------------------------------
# subcommands


def _cmd_bound(args) -> int:
    result = fixed_point_bound(args.f)
    payload = {
        "command": "bound",
        "function": args.f.spec_string(),
        "value": _bound_value(result.value),
        "unbounded": bool(result.unbounded),
        "cross_check_max": (None if result.cross_check_max is None
                            else float(result.cross_check_max)),
        "cross_check_ok": result.cross_check_ok,
    }
    _emit(payload, args.json)
    breach = (result.cross_check_ok is False
              and is_class_s_family(args.f))
    return 3 if breach else 0


def _cmd_solve_recursion(args) -> int:
    cfg = SolverConfig(b_tolerance=args.tol, max_iterations=args.max_iter)
    trace = iterate(args.f, cfg)
    payload = {
        "command": "solve-recursion",
        "function": args.f.spec_string(),
        "status": trace.status.value,
        "iterations": len(trace.b) - 1,
        "final": float(trace.final),
        "limit": None if trace.limit is None else float(trace.limit),
        "diverged_at": trace.diverged_at,
        "b": [float(v) for v in trace.b],
        "a_star": [float(v) for v in trace.a_star],
    }
    _emit(payload, args.json)
    if args.csv:
        rows = [(0, repr(float(trace.b[0])), "")]
        rows += [(n, repr(float(b)), repr(float(a)))
                 for n, (b, a) in enumerate(zip(trace.b[1:], trace.a_star),
                                            start=1)]
        _write_csv(args.csv, ["n", "b_n", "a_star_n"], rows)
    return 0


def _solver_from_args(args) -> SolverConfig:
    return SolverConfig(opt_grid_points=args.opt_grid,
                        refine_iters=args.refine)


def _cmd_solve_bellman(args) -> int:
    y_max = float(args.horizon) if args.y_max is None else args.y_max
    table = value_iteration(args.f, args.horizon,
                            GridConfig(y_max, args.step),
                            solver=_solver_from_args(args))
    payload = {
        "command": "solve-bellman",
        "format": ARTIFACT_FORMAT,
        "function": args.f.spec_string(),
        "horizon": table.horizon,
        "grid": {"y_max": float(table.grid.y_max),
                 "step": float(table.grid.step)},
        "solver": {"opt_grid_points": table.solver.opt_grid_points,
                   "refine_iters": table.solver.refine_iters},
        "clamp_used": bool(table.clamp_used),
        "values_at_zero": table.growth_values(),
        "actions": [[float(a) for a in row] for row in table.A],
    }
    _emit(payload, args.json)
    if args.csv:
        rows = []
        for n in range(table.horizon + 1):
            for j, y in enumerate(table.y):
                rows.append((n, repr(float(y)), repr(float(table.V[n, j])),
                             repr(float(table.A[n, j]))))
        _write_csv(args.csv, ["n", "y", "value", "action"], rows)
    return 0


def _cmd_compare(args) -> int:
    comparison = compare_bounds(args.f, args.horizon,
                                GridConfig(float(args.horizon), args.step))
    payload = {
        "command": "compare",
        "function": args.f.spec_string(),
        "horizon": args.horizon,
        "step": float(args.step),
        "budget": float(comparison.budget),
        "enforced": comparison.enforced,
        "within_budget": comparison.within_budget,
        "max_gap": float(comparison.max_gap),
        "max_abs_gap": float(comparison.max_abs_gap),
        "rows": [[n, c, b, g] for n, c, b, g in comparison.rows],
    }
    _emit(payload, args.json)
    if args.csv:
        _write_csv(args.csv, ["n", "c_n", "b_n", "gap"],
                   [(n, repr(c), repr(b), repr(g))
                    for n, c, b, g in comparison.rows])
    return 3 if comparison.enforced and not comparison.within_budget else 0


def _cmd_test_shift(args) -> int:
    report = property_scan(args.f, args.trials, args.seed,
                           max_atoms=args.max_atoms,
                           value_cap=args.value_cap)
    payload = {
        "command": "test-shift",
        "function": args.f.spec_string(),
        "trials": report.trials,
        "seed": report.seed,
        "violations": report.violations,
        "min_gap": float(report.min_gap),
        "argmin": {
            "trial": report.argmin_trial,
            "shift": float(report.argmin_shift),
            "atoms": [[float(v), float(p)]
                      for v, p in report.argmin_rv.atoms],
        },
        "injected_gap": float(report.injected_gap),
    }
    extra = (args.report,) if args.report else ()
    _emit(payload, args.json, extra)
    expected_clean = is_class_s_family(args.f)
    return 3 if expected_clean and report.violations > 0 else 0


def _load_policy(path: str, expected: FunctionSpec):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"could not read policy artifact '{path}': {exc}")
    if data.get("format") != ARTIFACT_FORMAT:
        raise ValueError(f"'{path}' is not a value-table artifact "
                         f"(format tag {data.get('format')!r})")
    artifact_spec = parse_function_spec(data["function"])
    if artifact_spec != expected:
        raise ValueError(
            f"policy artifact was built for {data['function']}, "
            f"got --f {expected.spec_string()}")
    grid = GridConfig(data["grid"]["y_max"], data["grid"]["step"])
    actions = np.array(data["actions"], dtype=float)
    if actions.shape != (data["horizon"] + 1, grid.n_points):
        raise ValueError(f"action table in '{path}' does not match its "
                         f"declared horizon and grid")
    values = np.zeros_like(actions)
    table = ValueTable(artifact_spec, grid, grid.points(), values, actions,
                       bool(data.get("clamp_used", True)))
    return extremal_policy(table), [float(v) for v in data["values_at_zero"]]


def _dump_path_rows(result, y_of_step, dump_count: int) -> list[tuple]:
    rows = []
    n = result.n_steps
    for i in range(min(len(result.t_hit), dump_count)):
        t = int(result.t_hit[i])
        for k in range(n + 1):
            x = 1.0 if k >= t else 0.0
            y = y_of_step(min(k, t))
            rows.append((i, k, repr(x), repr(float(y)),
                         repr(float(x - y))))
    return rows


def _cmd_simulate(args) -> int:
    if args.chain == "intro":
        sim = simulate_intro(args.f, args.n, args.paths, args.seed)
        exact = exact_expectation(args.f, intro_chain_law(args.n))
        payload = {
            "command": "simulate",
            "chain": "intro",
            "function": args.f.spec_string(),
            "n_steps": sim.n_steps,
            "paths": sim.n_paths,
            "seed": sim.seed,
            "mean_f": sim.mean_f,
            "std_error": sim.std_error,
            "exact_f": float(exact),
            "abs_error": abs(sim.mean_f - exact),
            "within_4se": bool(abs(sim.mean_f - exact)
                               <= 4.0 * sim.std_error),
            "max_doob_residual": sim.max_doob_residual,
        }
        _emit(payload, args.json)
        if args.csv:
            rows = _dump_path_rows(sim, lambda k: 0.5 * k,
                                   min(args.dump_paths, sim.n_paths))
            _write_csv(args.csv, ["path_id", "k", "X", "Y", "M"], rows)
        return 0

    policy, values_at_zero = _load_policy(args.policy, args.f)
    horizon = args.horizon or policy.table.horizon
    if horizon > policy.table.horizon:
        raise ValueError(f"--horizon {horizon} exceeds the artifact "
                         f"horizon {policy.table.horizon}")
    sim = simulate_extremal(policy, args.f, args.paths, args.seed,
                            horizon=horizon)
    law = extremal_chain_law(policy, horizon)
    exact = exact_expectation(args.f, law)
    # Increments along the only reachable trajectory, reported so the
    # time-only dependence of the optimal increment can be inspected
    # rather than assumed.
    a_sched, y_sched = policy_schedule(policy, horizon)
    payload = {
        "command": "simulate",
        "chain": "extremal",
        "function": args.f.spec_string(),
        "horizon": horizon,
        "paths": sim.n_paths,
        "seed": sim.seed,
        "mean_f": sim.mean_f,
        "std_error": sim.std_error,
        "exact_f": float(exact),
        "table_value": values_at_zero[horizon],
        "abs_error": abs(sim.mean_f - exact),
        "within_4se": bool(abs(sim.mean_f - exact)
                           <= 4.0 * sim.std_error),
        "max_doob_residual": sim.max_doob_residual,
        "increments": [float(a) for a in a_sched],
    }
    _emit(payload, args.json)
    if args.csv:
        rows = _dump_path_rows(sim, lambda k: float(y_sched[k]),
                               min(args.dump_paths, sim.n_paths))
        _write_csv(args.csv, ["path_id", "k", "X", "Y", "M"], rows)
    return 0


# ----------------------------------------------------------------------
# combined report


def run_report(spec: FunctionSpec, horizon: int = 20,
               step: float = 1.0 / 512, trials: int = 1000,
               seed: int = 0) -> tuple[dict, int]:
    """Run the whole battery for one function and collect the verdicts.

    Returns the JSON-ready payload and the exit code (0 when every
    consistency check passed or the finding was expected, 3 otherwise).
    """
    failures: list[str] = []
    class_s = is_class_s_family(spec)

    fp = fixed_point_bound(spec)
    trace = iterate(spec)
    # Domination of the recursion by the fixed point is a shift-class
    # statement; outside the class the pair is reported, not judged.
    if class_s:
        if fp.unbounded:
            if trace.status == RecursionStatus.CONVERGED:
                failures.append("recursion converged although the "
                                "fixed-point bound is unbounded")
        else:
            if trace.status == RecursionStatus.DIVERGED:
                failures.append("recursion diverged although the "
                                "fixed-point bound is finite")
            elif trace.status == RecursionStatus.CONVERGED:
                scale = max(1.0, abs(fp.value))
                if abs(trace.limit - fp.value) > 1e-3 * scale:
                    failures.append("recursion limit does not match the "
                                    "fixed-point bound")

    table = value_iteration(spec, horizon, GridConfig(float(horizon), step))
    comparison = compare_bounds(spec, horizon, table=table)
    if comparison.enforced and not comparison.within_budget:
        failures.append("exact values exceed the recursion bound beyond "
                        "the grid budget")

    scan = property_scan(spec, trials, seed)
    if class_s and scan.violations > 0:
        failures.append("shift-inequality violations found for a "
                        "shift-class function")

    law = extremal_chain_law(extremal_policy(table), horizon)
    chain_exact = exact_expectation(spec, law)
    chain_diff = abs(chain_exact - table.value_at_zero(horizon))
    if chain_diff > comparison.budget:
        failures.append("extremal chain expectation does not reproduce "
                        "the table value")

    payload = {
        "command": "report",
        "function": spec.spec_string(),
        "class_s": class_s,
        "bound": {
            "value": _bound_value(fp.value),
            "cross_check_ok": fp.cross_check_ok,
        },
        "recursion": {
            "status": trace.status.value,
            "iterations": len(trace.b) - 1,
            "final": float(trace.final),
            "limit": None if trace.limit is None else float(trace.limit),
        },
        "comparison": {
            "horizon": horizon,
            "step": float(step),
            "budget": float(comparison.budget),
            "enforced": comparison.enforced,
            "within_budget": comparison.within_budget,
            "max_gap": float(comparison.max_gap),
            "rows": [[n, c, b, g] for n, c, b, g in comparison.rows],
        },
        "shift_scan": {
            "trials": scan.trials,
            "seed": scan.seed,
            "violations": scan.violations,
            "min_gap": float(scan.min_gap),
            "violations_expected": not class_s,
        },
        "chain_check": {
            "exact_expectation": float(chain_exact),
            "table_value": table.value_at_zero(horizon),
            "abs_diff": float(chain_diff),
            "within_budget": chain_diff <= comparison.budget,
        },
        "failures": failures,
        "status": "all-pass" if not failures else "breach",
    }
    return payload, (0 if not failures else 3)


def _cmd_report(args) -> int:
    payload, code = run_report(args.f, horizon=args.horizon, step=args.step,
                               trials=args.trials, seed=args.seed)
    _emit(payload, args.json)
    if args.csv:
        _write_csv(args.csv, ["n", "c_n", "b_n", "gap"],
                   [(n, repr(c), repr(b), repr(g))
                    for n, c, b, g in payload["comparison"]["rows"]])
    return code


_HANDLERS = {
    "bound": _cmd_bound,
    "solve-recursion": _cmd_solve_recursion,
    "solve-bellman": _cmd_solve_bellman,
    "compare": _cmd_compare,
    "test-shift": _cmd_test_shift,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
