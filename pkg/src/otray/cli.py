"""Command-line entry point.

  otray run --scenario FILE [--checks all] [--samples N] [--seed S]
            [--grid G] [--tol-scale F] [--out DIR] [--format csv|json|plot-tables]
  otray validate --scenario FILE
  otray list-checks

Exit code 0 iff every requested check passes; 2 on usage, parse, or
validation errors.  OTRAY_THREADS caps the BLAS worker count (0 = auto).
"""

from __future__ import annotations

import argparse
import os
import sys

from .checks import REGISTRY, run_check
from .disintegration import QuadratureSpec
from .errors import OtrayError
from .report import assemble, emit_report
from .scenarios import load_scenario


def _apply_thread_cap() -> None:
    raw = os.environ.get("OTRAY_THREADS", "").strip()
    if not raw:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise OtrayError(f"OTRAY_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise OtrayError(f"OTRAY_THREADS must be >= 0, got {cap}")
    if cap > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(cap))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otray", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run checks against a scenario and emit a report")
    run.add_argument("--scenario", required=True, help="scenario file path")
    run.add_argument("--checks", default="all", help="comma-separated check ids, or 'all'")
    run.add_argument("--samples", type=int, default=100_000)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--grid", type=int, default=129)
    run.add_argument("--tol-scale", type=float, default=1.0)
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--format", default="csv", choices=["csv", "json", "plot-tables"])

    val = sub.add_parser("validate", help="parse and validate a scenario file")
    val.add_argument("--scenario", required=True)

    sub.add_parser("list-checks", help="print registered check ids")
    return parser


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    if args.checks.strip() == "all":
        check_ids = sorted(REGISTRY)
    else:
        check_ids = [c.strip() for c in args.checks.split(",") if c.strip()]
    q = QuadratureSpec(samples=args.samples, seed=args.seed)
    results = [run_check(cid, scn, q, args.grid, args.tol_scale) for cid in check_ids]
    report = assemble(results, scn.manifold, {"scenario": scn.name})
    paths = emit_report(report, args.format, args.out)
    for r in report.rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check}: {r.metric}={r.value:.6g} (tol {r.tolerance:.3g}, {r.wall_ms} ms)")
    for p in paths:
        print(f"wrote {p}")
    return 0 if report.all_passed else 1


def _cmd_validate(args) -> int:
    scn = load_scenario(args.scenario)
    print(f"ok: {scn.name} ({scn.kind}, n={scn.manifold.n}, K={scn.manifold.K})")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _apply_thread_cap()
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        for cid in sorted(REGISTRY):
            print(cid)
        return 0
    except OtrayError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
