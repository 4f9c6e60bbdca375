"""Command line entry point: ``nonlocal-rd {regime,run,preset,check}``.

Exit codes: 0 success, 1 usage error, 2 run failure, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import parse_config
from .errors import ConfigError, NotApplicableError
from .exponents import classify
from .runner import check_series, dichotomy_preset, run_plan

EXIT_OK, EXIT_USAGE, EXIT_RUN, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="nonlocal-rd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("regime", help="print the regime report as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p2", type=float, default=None, help="Sobolev exponent to use when n=2")

    p = sub.add_parser("run", help="execute a JSON experiment config")
    p.add_argument("config", type=Path)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("preset", help="run a shipped experiment")
    p.add_argument("name", choices=["dichotomy"])
    p.add_argument("--n", type=int, required=True, choices=[1, 2])
    p.add_argument("--m", type=int, default=None, help="override points per axis")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("check", help="re-run monitors on a persisted series CSV")
    p.add_argument("series", type=Path)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--sigma", type=float)
    return parser


def _report_plan(summaries):
    for s in summaries:
        print(f"{s.name}: {s.verdict.kind}"
              + ("" if not s.violated else "  [invariant violated]"))
    if any(s.verdict.kind == "Inconclusive" for s in summaries):
        return EXIT_RUN
    if any(s.violated for s in summaries):
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_regime(args):
    try:
        report = classify(args.n, args.alpha, args.beta, p2=args.p2)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_run(args):
    try:
        plan = parse_config(args.config.read_text(encoding="utf-8"))
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _report_plan(run_plan(plan, workers=args.workers, output_dir=args.out))


def cmd_preset(args):
    plan = dichotomy_preset(args.n, m=args.m, output_dir=args.out)
    return _report_plan(run_plan(plan, workers=args.workers))


def cmd_check(args):
    params = {"alpha": args.alpha, "beta": args.beta, "sigma": args.sigma}
    verdict = None
    summary = args.series.with_suffix(".json")
    if summary.exists():
        d = json.loads(summary.read_text())
        for key in params:
            if params[key] is None:
                params[key] = d["spec"][key]
        verdict = d["verdict"]["kind"]
    missing = [k for k, v in params.items() if v is None]
    if missing:
        print(f"error: --{missing[0]} required (no summary next to the series)", file=sys.stderr)
        return EXIT_USAGE
    try:
        reports = check_series(args.series, verdict=verdict, **params)
    except (OSError, KeyError, ValueError) as exc:
        if isinstance(exc, NotApplicableError):
            print(f"not applicable: {exc}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN
    print(json.dumps([r.to_dict() for r in reports], indent=2))
    return EXIT_INVARIANT if any(not r.holds for r in reports) else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    handler = {"regime": cmd_regime, "run": cmd_run, "preset": cmd_preset, "check": cmd_check}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
