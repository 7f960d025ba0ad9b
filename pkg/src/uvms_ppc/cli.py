"""Command line: run/validate scenarios, emit the bundled scenario, re-check logs.

Exit codes: 0 success, 1 validation or envelope failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .scenario import PAPER_SCENARIO, ScenarioError, load_scenario, run_scenario, scenario_text, validate
from .simulation import SimulationError, export_log, import_log
from .verification.batteries import envelope_battery

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uvms-ppc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario and write its log")
    run.add_argument("scenario", type=Path)
    run.add_argument("--out", type=Path, help="log path (default: <scenario>.csv in the working directory)")
    run.add_argument("--seed", type=int, help="noise seed, overrides the file")
    run.add_argument("--duration", type=float, help="seconds, overrides the file")
    run.add_argument("--format", choices=("csv", "tsv"), default="csv")
    run.add_argument("--report", type=Path, help="also write an envelope report here")

    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario", type=Path)

    ps = sub.add_parser("paper-scenario", help="print the bundled force-tracking scenario")
    ps.add_argument("--out", type=Path, help="write to a file instead of stdout")

    chk = sub.add_parser("check-invariants", help="re-verify envelope containment on a log")
    chk.add_argument("log", type=Path)
    return parser


def _load(path: Path):
    s = load_scenario(path)
    validate(s)
    return s


def cmd_run(args) -> int:
    s = _load(args.scenario)
    if args.seed is not None:
        if args.seed < 0:
            raise ScenarioError("seed must be >= 0")
        s = s.with_seed(args.seed)
    if args.duration is not None:
        s = replace(s, duration=args.duration)
        validate(s)
    out = args.out or Path(args.scenario.stem + "." + args.format)
    try:
        log = run_scenario(s)
    except SimulationError as exc:
        if exc.log is not None:
            export_log(exc.log, out, args.format)
            print(f"partial log written to {out}", file=sys.stderr)
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    export_log(log, out, args.format)
    report = envelope_battery(log)
    if args.report:
        report.write(args.report)
    print(f"wrote {out} ({len(log)} records)")
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_validate(args) -> int:
    s = _load(args.scenario)
    print(f"{args.scenario}: ok ({s.name}, {s.duration:g} s at h={s.h:g} s)")
    return EXIT_OK


def cmd_paper_scenario(args) -> int:
    text = scenario_text(PAPER_SCENARIO)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_invariants(args) -> int:
    try:
        log = import_log(args.log)
    except (OSError, ValueError, StopIteration) as exc:
        print(f"cannot read log {args.log}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = envelope_battery(log)
    print(report.summary())
    if not report.passed and report.worst_input:
        w = report.worst_input
        print(f"violation: {w['level']} channel {w['channel']} at t={w['t']:.6f} s "
              f"(|e|={abs(w['error']):.6g}, rho={w['rho']:.6g})")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "run": cmd_run,
    "validate": cmd_validate,
    "paper-scenario": cmd_paper_scenario,
    "check-invariants": cmd_check_invariants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
