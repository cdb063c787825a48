"""Command line entry point: ``nlcombine run <config> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, ParseError
from .config import resolve_config
from .output import emit_forecast_diagram, emit_report, write_atomic
from .runner import ENSEMBLE_LABEL, ExperimentError, run_experiment

log = logging.getLogger("nlcombine")


def build_parser():
    parser = argparse.ArgumentParser(prog="nlcombine",
                                     description="Forecast combination experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one dataset experiment")
    run.add_argument("config", help="config file, or a bundled name: lynx, sunspots, airline")
    run.add_argument("--out", type=Path, help="output directory (default: config output_dir "
                                              "or ./results/<dataset>)")
    run.add_argument("--seed", type=int)
    run.add_argument("--format", choices=("csv", "table"), default="table")
    run.add_argument("--mode", choices=("rolling", "iterated"))
    run.add_argument("--stats", choices=("frozen", "recompute"))
    run.add_argument("--ridge", type=float, metavar="LAMBDA")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def write_outputs(report, out: Path, fmt: str):
    out.mkdir(parents=True, exist_ok=True)
    suffix = "csv" if fmt == "csv" else "txt"
    paths = [emit_report(report, out / f"report.{suffix}", fmt)]
    if report.ensemble is not None:
        paths.append(write_atomic(out / "ensemble_weights.txt", report.ensemble.to_text()))
    dumps = "\n".join(f"[{name}]\n{text}" for name, text in report.model_dumps.items())
    paths.append(write_atomic(out / "models.txt", dumps))
    shown = {k: report.test_forecasts[k] for k in (ENSEMBLE_LABEL,)
             if k in report.test_forecasts}
    paths += emit_forecast_diagram(report.test_actual, shown, out / "forecast_diagram",
                                   title=f"Forecast diagram: {report.dataset}")
    paths += emit_forecast_diagram(report.test_actual,
                                   {k: v for k, v in report.test_forecasts.items()},
                                   out / "all_forecasts",
                                   title=f"Test-window forecasts: {report.dataset}")
    return paths


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args.config)
        cfg = cfg.with_overrides(seed=args.seed, mode=args.mode, stats=args.stats,
                                 ridge=args.ridge)
    except (ConfigError, ParseError, ValueError, OSError) as exc:
        print(f"nlcombine: stage 'config' failed: {exc}", file=sys.stderr)
        return 2
    try:
        report = run_experiment(cfg)
    except ExperimentError as exc:
        print(f"nlcombine: {exc}", file=sys.stderr)
        return 1
    out = args.out or cfg.output_dir or Path("results") / cfg.name
    try:
        paths = write_outputs(report, out, args.format)
    except OSError as exc:
        print(f"nlcombine: stage 'write' failed: {exc}", file=sys.stderr)
        return 1
    for stage, seconds in report.timings.items():
        log.info("%s: %.3f s", stage, seconds)
    with open(paths[0], encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return 0


if __name__ == "__main__":
    sys.exit(main())
