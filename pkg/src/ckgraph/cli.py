"""Command-line front door: solve / check / certify / verify.

Exit codes: 0 success, 1 input or parameter error, 2 solver stalled,
3 iterates left the flow interval.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import (boundary_normal_slope, check_hypotheses,
                       cylinder_monotonicity_probe, height_barrier,
                       search_boundary_barrier, search_height_barrier)
from .errors import DomainError, MeshError, ParameterError, SchemaError
from .fields import ScalarField
from .mesh import mesh_to_json
from .operator import max_principle_conditions, mean_curvature_of_graph
from .problemfile import LoadedProblem, load_problem
from .solver import continuation_solve

_STATUS_EXIT = {"converged": 0, "stalled": 2, "left_interval": 3}


def _dump_json(doc, path=None):
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path is None:
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _report_skeleton(status: str):
    return {
        "status": status,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _run_checks(loaded: LoadedProblem, report: dict):
    problem = loaded.problem
    if "hypotheses" in loaded.checks:
        report["hypotheses"] = check_hypotheses(problem).to_json()
    if "max_principle" in loaded.checks:
        phi_min = float(problem.phi[problem.mesh.boundary_vertices].min())
        report["max_principle"] = max_principle_conditions(
            problem.ambient, problem.H, (min(phi_min, 0.0) - 1.0, 0.01)).to_json()
    if "monotonicity" in loaded.checks:
        h = problem.mesh.h
        depths = [2 * h, 4 * h, 6 * h]
        report["monotonicity"] = cylinder_monotonicity_probe(problem, depths)


def cmd_solve(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = _report_skeleton("input_error")
    try:
        loaded = load_problem(args.problem)
    except (SchemaError, ParameterError, MeshError, DomainError) as exc:
        report["error"] = str(exc)
        _dump_json(report, out / "report.json")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    problem = loaded.problem
    hyp = check_hypotheses(problem)
    report["hypotheses"] = hyp.to_json()
    if not hyp.passed:
        names = ", ".join(hyp.failing())
        if args.strict:
            report["status"] = "hypotheses_failed"
            report["error"] = f"failing conditions: {names}"
            _dump_json(report, out / "report.json")
            print(f"error: hypothesis check failed ({names})", file=sys.stderr)
            return 1
        print(f"warning: failing conditions: {names}", file=sys.stderr)

    _dump_json(mesh_to_json(problem.mesh), out / "mesh.json")
    log_path = out / "log.jsonl"
    with open(log_path, "w", encoding="utf-8") as log:
        def on_iteration(rec):
            log.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")

        solve = continuation_solve(problem, loaded.options, on_iteration)

    report["status"] = solve.status
    report["tau_reached"] = solve.tau_reached
    report["tau_path"] = solve.tau_path
    report["grad_sup_history"] = solve.grad_sup_history
    report["newton_iterations"] = len(solve.newton_history)
    report["clamped"] = solve.clamped
    if solve.message:
        report["message"] = solve.message
    if solve.solution is not None:
        solve.solution.to_csv(out / "solution.csv")
        report["solution_range"] = [float(solve.solution.values.min()),
                                    float(solve.solution.values.max())]
    _run_checks(loaded, report)
    _dump_json(report, out / "report.json")
    code = _STATUS_EXIT[solve.status]
    print(f"{solve.status}: tau = {solve.tau_reached}, "
          f"{len(solve.newton_history)} Newton iterations")
    return code


def cmd_check(args) -> int:
    try:
        loaded = load_problem(args.problem)
        hyp = check_hypotheses(loaded.problem)
    except (SchemaError, ParameterError, MeshError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _dump_json(hyp.to_json())
    return 0 if hyp.passed else 1


def _load_solution(loaded: LoadedProblem, csv_path) -> ScalarField:
    z = ScalarField.from_csv(loaded.problem.mesh, csv_path)
    return z


def cmd_certify(args) -> int:
    try:
        loaded = load_problem(args.problem)
        z = _load_solution(loaded, args.solution)
    except (SchemaError, ParameterError, MeshError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    problem = loaded.problem
    report = _report_skeleton("certified")
    certs = {}
    try:
        if args.D is not None or args.B is not None:
            if args.D is None or args.B is None:
                raise ParameterError("--D and --B must be given together")
            _, certs["height"] = height_barrier(problem, args.D, args.B, z)
        else:
            _, certs["height"] = search_height_barrier(problem, z)
        _, certs["boundary_lower"] = search_boundary_barrier(
            problem, z, eps=args.eps, upper=False)
        _, certs["boundary_upper"] = search_boundary_barrier(
            problem, z, eps=args.eps, upper=True)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    slopes = boundary_normal_slope(problem, z)
    report["certificates"] = {k: c.to_json() for k, c in certs.items()}
    report["boundary_slope_range"] = [float(slopes.min()), float(slopes.max())]
    ok = all(c.valid for c in certs.values())
    report["status"] = "certified" if ok else "certificate_failed"
    if args.out:
        _dump_json(report, Path(args.out))
    else:
        _dump_json(report)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    try:
        loaded = load_problem(args.problem)
        z = _load_solution(loaded, args.solution)
    except (SchemaError, ParameterError, MeshError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    problem = loaded.problem
    H_rec, conf = mean_curvature_of_graph(problem, z)
    mask = conf & ~problem.mesh.is_boundary
    if not np.any(mask):
        print("error: no interior vertices with confident recovery",
              file=sys.stderr)
        return 1
    diff = np.abs(H_rec.values[mask] - problem.H.values[mask])
    tol = loaded.verify_tolerance if args.tol is None else args.tol
    out = {
        "max_discrepancy": float(diff.max()),
        "mean_discrepancy": float(diff.mean()),
        "tolerance": tol,
        "checked_vertices": int(mask.sum()),
        "passed": bool(diff.mean() <= tol),
    }
    _dump_json(out)
    return 0 if out["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ckg",
        description="Dirichlet solver for prescribed-mean-curvature graphs "
                    "along a conformal Killing flow")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the continuation solver")
    s.add_argument("problem")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--strict", action="store_true",
                   help="refuse to solve when a hypothesis check fails")
    s.set_defaults(fn=cmd_solve)

    c = sub.add_parser("check", help="evaluate the solvability conditions")
    c.add_argument("problem")
    c.set_defaults(fn=cmd_check)

    ce = sub.add_parser("certify", help="barrier certificates for a solution")
    ce.add_argument("problem")
    ce.add_argument("solution", help="solution.csv to certify")
    ce.add_argument("--eps", type=float, default=0.05,
                    help="boundary strip width")
    ce.add_argument("--D", type=float, default=None)
    ce.add_argument("--B", type=float, default=None)
    ce.add_argument("--out", default=None, help="write the report here")
    ce.set_defaults(fn=cmd_certify)

    v = sub.add_parser("verify", help="recovered-vs-prescribed curvature")
    v.add_argument("problem")
    v.add_argument("solution")
    v.add_argument("--tol", type=float, default=None)
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
