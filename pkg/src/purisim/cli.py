"""Command-line interface.

    purisim run --config scenario.json [--seed N] [--out DIR]
    purisim paper-suite [--out DIR]
    purisim plot report.json [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 post-selection yielded no
coincidences.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .runner import (
    ConfigError, emit_plots, format_comparison_table, load_scenario,
    report_to_dict, run, run_paper_suite, write_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_COINCIDENCE = 3


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.config)
        if args.seed is not None:
            scenario = replace(scenario,
                               detection=replace(scenario.detection, seed=args.seed))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run(scenario)
    outdir = Path(args.out) if args.out else Path.cwd() / scenario.name
    path = write_report(report, outdir)
    print(f"wrote {path}")
    if report.no_coincidence:
        print("no coincidence: post-selection probability below threshold",
              file=sys.stderr)
        return EXIT_NO_COINCIDENCE
    return EXIT_OK


def _cmd_paper_suite(args) -> int:
    reports, table = run_paper_suite()
    outdir = Path(args.out) if args.out else Path.cwd() / "paper_suite"
    outdir.mkdir(parents=True, exist_ok=True)
    for report in reports:
        write_report(report, outdir / report.scenario.name)
    with open(outdir / "comparison.json", "w", encoding="utf-8") as fh:
        json.dump(table, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(format_comparison_table(table))
    print(f"\nreports under {outdir}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    path = Path(args.report)
    try:
        with open(path, encoding="utf-8") as fh:
            report_dict = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: cannot read report {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(args.out) if args.out else path.parent / "plots"
    try:
        written = emit_plots(report_dict, outdir)
    except (OSError, ValueError) as exc:
        print(f"plot error for {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="purisim",
        description="Simulator of on-chip deterministic entanglement purification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a JSON config")
    p_run.add_argument("--config", required=True, help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override RNG seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("paper-suite",
                             help="run the reference experiment matrix")
    p_suite.add_argument("--out", default=None, help="output directory")
    p_suite.set_defaults(func=_cmd_paper_suite)

    p_plot = sub.add_parser("plot", help="render density-matrix bar charts")
    p_plot.add_argument("report", help="path to a report.json")
    p_plot.add_argument("--out", default=None, help="output directory")
    p_plot.set_defaults(func=_cmd_plot)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
