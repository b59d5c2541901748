"""Command line entry point: ``twr-tdoa run|sweep|locate|selftest``.

Exit codes: 0 success, 1 usage or configuration error, 2 selftest failure.
"""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from twr_tdoa.runner import run_rows, summarize, write_csv, write_jsonl, write_plot_data
from twr_tdoa.scenario import ScenarioError, load_scenario
from twr_tdoa.selftest import report_lines, run_selftest
from twr_tdoa.timebase import ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twr-tdoa", description="Two-way ranging / passive TDoA simulator")
    p.add_argument("verb", choices=("run", "sweep", "locate", "selftest"))
    p.add_argument("scenario", nargs="?", help="scenario JSON file (optional for selftest)")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--emit-plot-data", type=Path, metavar="DIR",
                   help="write one (x, error) CSV per sweep axis into DIR")
    p.add_argument("--seed", type=int, help="override the scenario seed (u64)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
    p.add_argument("--cases", type=int, default=2000, help="selftest: random exchanges to check")
    return p


def _selftest(args) -> int:
    seed = args.seed
    if seed is None and args.scenario:
        seed = load_scenario(args.scenario).seed
    seed = 0 if seed is None else seed
    lines = report_lines(run_selftest(seed, args.cases), seed)
    text = "\n".join(lines) + "\n"
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if lines[-1].endswith("PASS") else EXIT_INVARIANT


def _run(args) -> int:
    if not args.scenario:
        raise ScenarioError(f"{args.verb}: a scenario file is required")
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ScenarioError("--seed must be an unsigned 64-bit integer")
        scenario = scenario.model_copy(update={"seed": args.seed})
    localize = args.verb == "locate"
    if localize and scenario.localization is None:
        raise ScenarioError("locate: scenario has no 'localization' section")
    if args.verb == "sweep" and not scenario.sweep:
        print("twr-tdoa: note: no sweep axes, running a single point", file=sys.stderr)

    rows = run_rows(scenario, localize=localize, jobs=max(1, args.jobs))
    buf = io.StringIO()
    (write_jsonl if args.format == "jsonl" else write_csv)(scenario, rows, buf)
    if args.out:
        args.out.write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.emit_plot_data:
        write_plot_data(scenario, rows, args.emit_plot_data)
    for line in summarize(scenario, rows).lines():
        print(line, file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "selftest":
            return _selftest(args)
        return _run(args)
    except (ScenarioError, ConfigurationError) as exc:
        print(f"twr-tdoa: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
