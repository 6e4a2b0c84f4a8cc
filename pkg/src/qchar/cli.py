"""Command-line entry point.

Exit status: 0 success, 1 a requested verification failed, 2 the input could
not be parsed or validated, 3 a numerical step failed.  Errors are reported
as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .records import write_csv, write_json

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _diag(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}, sort_keys=True), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qchar",
        description="Phase-space quantum dynamics with quantum characteristics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--out", type=Path, default=None, help="output directory (default: scenario setting or ./results)")
    parser.add_argument("--format", choices=("csv", "json"), default=None, help="artifact format")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for batch propagation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a JSON scenario")
    p.add_argument("scenario", type=Path)

    sub.add_parser("verify-all", help="run the acceptance criteria")

    p = sub.add_parser("project", help="project a scenario's Hamiltonian and observables onto its constraints")
    p.add_argument("scenario", type=Path)

    p = sub.add_parser("example-s2", help="hbar^2 star-product coefficients for the cubic generating-function map")
    p.add_argument("--Q", type=float, required=True)
    p.add_argument("--P", type=float, required=True)
    p.add_argument("--hbar", type=float, default=0.1)
    p.add_argument("--method", choices=("analytic", "two-point", "fd"), default="analytic")
    return parser


def _cmd_run(args) -> int:
    from .scenario import NumericalFailure, ScenarioError, load_scenario, run_scenario

    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        _diag("input", str(exc))
        return EXIT_INPUT
    try:
        summary = run_scenario(sc, args.out, fmt=args.format, threads=args.threads)
    except NumericalFailure as exc:
        _diag("numerical", str(exc))
        return EXIT_NUMERIC
    print(json.dumps(summary, sort_keys=True))
    if not summary["verified"]:
        _diag("verification", "one or more residuals are nonzero; see verification.json")
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_project(args) -> int:
    from .scenario import NumericalFailure, ScenarioError, load_scenario, project_scenario

    try:
        sc = load_scenario(args.scenario)
        if sc.constraints is None:
            raise ScenarioError("scenario has no constraints")
    except ScenarioError as exc:
        _diag("input", str(exc))
        return EXIT_INPUT
    try:
        summary = project_scenario(sc, args.out or Path(sc.out_path or "results"))
    except NumericalFailure as exc:
        _diag("numerical", str(exc))
        return EXIT_NUMERIC
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK if summary["verified"] else EXIT_VERIFY


def _cmd_verify_all(args) -> int:
    from .acceptance import verify_all_document

    out = args.out or Path("results")
    out.mkdir(parents=True, exist_ok=True)
    doc, results = verify_all_document()
    if args.format == "csv":
        rows = [[r.id, r.name, "pass" if r.passed else "fail"] for r in results]
        write_csv(out / "verify_all.csv", ["id", "criterion", "verdict"], rows)
    else:
        write_json(out / "verify_all.json", doc)
    for r in results:
        print(r.line())
    return EXIT_OK if doc["all_passed"] else EXIT_VERIFY


def _cmd_example_s2(args) -> int:
    from .numstar import generating_map_example

    try:
        report = generating_map_example(args.Q, args.P, args.hbar, method=args.method)
    except (ZeroDivisionError, ValueError) as exc:
        _diag("input", str(exc))
        return EXIT_INPUT
    from .records import dumps_json

    text = dumps_json(report)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / "example_s2.json", report)
    sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    handlers = {
        "run": _cmd_run,
        "project": _cmd_project,
        "verify-all": _cmd_verify_all,
        "example-s2": _cmd_example_s2,
    }
    return handlers[args.command](args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
