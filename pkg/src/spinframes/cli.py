"""Command-line entry point: ``spinframes check|report|metric|list-checks``.

Exit codes: 0 when every selected check passes, 1 when any fails, 2 when the
scenario cannot be loaded or the arguments are invalid.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .scenario import (
    CHECK_DESCRIPTIONS,
    CHECKS,
    ScenarioError,
    load_scenario,
    residual_norms,
    resolve_checks,
    run_checks,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_LOAD = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinframes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run a set of checks on a scenario")
    _add_common(check)
    check.add_argument("--checks", default="all", help="comma-separated check names or 'all'")
    check.add_argument("--format", choices=["json", "pretty"], default="pretty")
    check.add_argument("--residual-csv", default=None, help="dump per-point Dirac residual norms")

    report = sub.add_parser("report", help="run every check and emit the full report")
    _add_common(report)
    fmt = report.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--pretty", dest="format", action="store_const", const="pretty")
    report.set_defaults(format="json", checks="all", residual_csv=None)

    metric = sub.add_parser("metric", help="print the induced metric at a point")
    metric.add_argument("--scenario", required=True)
    metric.add_argument("--seed", type=int, default=None)
    metric.add_argument("--point", required=True, help="coordinates, e.g. 'r=1.5,th=0.4'")
    metric.add_argument("--transformed", action="store_true", help="use the transformed frame phi e")

    sub.add_parser("list-checks", help="list the available checks")
    return parser


def _parse_point(text: str, coords) -> np.ndarray:
    values = {}
    for part in text.split(","):
        name, sep, val = part.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {part!r}")
        values[name.strip()] = float(val)
    missing = [c for c in coords if c not in values]
    extra = [c for c in values if c not in coords]
    if missing or extra:
        raise ValueError(f"point must give exactly the coordinates {', '.join(coords)}")
    return np.array([[values[c] for c in coords]])


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_residual_csv(path: str, s) -> None:
    norms = residual_norms(s)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(s.chart.coords) + ["residual_norm"])
        for x, r in zip(s.chart.points, norms):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(r))])


def _cmd_metric(args) -> int:
    s = load_scenario(args.scenario, args.seed)
    x = _parse_point(args.point, s.chart.coords)
    frame = s.frame.at(x)[0]
    if args.transformed:
        frame = s.transform.at(x)[0] @ frame
    co = np.linalg.inv(frame)
    g = co.T @ s.rep.eta @ co
    g = 0.5 * (g + g.T)
    out = {"point": s.chart.point_dict(x[0]), "transformed": args.transformed, "metric": g.tolist()}
    sys.stdout.write(json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "list-checks":
        width = max(len(n) for n in CHECKS)
        for name, (cls, _) in CHECKS.items():
            sys.stdout.write(f"{name:<{width}}  {cls:<5}  {CHECK_DESCRIPTIONS[name]}\n")
        return EXIT_PASS

    try:
        if args.command == "metric":
            return _cmd_metric(args)
        names = resolve_checks(args.checks)
        s = load_scenario(args.scenario, args.seed)
    except (ScenarioError, KeyError, ValueError) as err:
        msg = err.args[0] if isinstance(err, KeyError) else str(err)
        print(f"spinframes: error: {msg}", file=sys.stderr)
        return EXIT_LOAD

    report = run_checks(s, names)
    _emit(report.to_json() if args.format == "json" else report.to_text(), args.out)
    if args.residual_csv:
        _write_residual_csv(args.residual_csv, s)
    for r in report.results:
        if not r.passed:
            detail = r.error or f"defect {r.defect:.3e} >= {r.tolerance:.0e}"
            print(f"spinframes: {r.name} failed: {detail}", file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
