"""Command-line interface.

    slicetuner run --config cfg.txt [--out DIR] [--trials N] [--seed S]
    slicetuner fit --points points.csv [--floor]
    slicetuner compare-estimation --config cfg.txt [--out DIR]
    slicetuner plot-data --report DIR [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 oracle/trainer error,
4 numerical failure. Set SLICETUNER_LOG=debug|info|warning to control
log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .curves import CurvePoint, fit_power_law
from .errors import (
    ConfigError,
    DegenerateFitError,
    InsufficientDataError,
    InvalidProblemError,
    NumericalError,
    OracleError,
)
from .harness import compare_estimation_modes, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("slicetuner")


def _setup_logging():
    level = os.environ.get("SLICETUNER_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _cmd_run(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["num_trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    out_dir = args.out or config.out_dir or "results"
    report = run_experiment(config, out_dir=out_dir)
    print(f"wrote {report.out_dir / 'raw.csv'} and {report.out_dir / 'summary.csv'}")
    for method in config.methods:
        s = report.summary[method]
        print(
            f"{method:>14}: loss {s['loss_mean']:.4f} +/- {s['loss_se']:.4f}  "
            f"avg_eer {s['avg_eer_mean']:.4f}  max_eer {s['max_eer_mean']:.4f}  "
            f"iters {s['iterations_mean']:.1f}  failures {s['failures']}"
        )
    return EXIT_OK


def _read_points(path: Path) -> list[CurvePoint]:
    try:
        rows = list(csv.reader(path.read_text().splitlines()))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    points = []
    for row in rows:
        if not row:
            continue
        try:
            size = int(float(row[0]))
            loss = float(row[1])
        except (ValueError, IndexError):
            continue  # header or malformed line
        weight = float(row[2]) if len(row) > 2 and row[2] else 1.0
        points.append(CurvePoint(size=size, loss=loss, weight=weight))
    if not points:
        raise ConfigError(f"no usable (size, loss) rows in {path}")
    return points


def _cmd_fit(args) -> int:
    points = _read_points(Path(args.points))
    curve = fit_power_law(points, fit_floor=args.floor)
    print(f"a = {curve.a!r}")
    print(f"b = {curve.b!r}")
    if args.floor:
        print(f"c = {curve.c!r}")
    print(f"converged = {curve.converged}")
    return EXIT_OK


def _cmd_compare_estimation(args) -> int:
    config = load_config(args.config)
    out_dir = args.out or config.out_dir or "results"
    comparison = compare_estimation_modes(config, out_dir=out_dir)
    print(
        f"queries per estimation pass: amortized {comparison.queries_amortized}, "
        f"exhaustive {comparison.queries_exhaustive}"
    )
    for mode in ("amortized", "exhaustive"):
        print(
            f"{mode:>10}: mean loss {comparison.mean_loss(mode):.4f}  "
            f"wall time {comparison.wall_time[mode]:.2f}s"
        )
    return EXIT_OK


def _cmd_plot_data(args) -> int:
    report_dir = Path(args.report)
    raw = report_dir / "raw.csv"
    if not raw.exists():
        raise ConfigError(f"no raw.csv under {report_dir}")
    out = Path(args.out) if args.out else report_dir / "plot_data.csv"
    with open(raw, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "budget", "trial", "loss", "avg_eer", "max_eer"])
        for row in rows:
            if row["status"] != "ok":
                continue
            writer.writerow(
                [row["method"], row["budget"], row["trial"],
                 row["loss"], row["avg_eer"], row["max_eer"]]
            )
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicetuner",
        description="Selective data acquisition: decide how much data to buy per slice.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_fit = sub.add_parser("fit", help="fit a power-law curve to a points CSV")
    p_fit.add_argument("--points", required=True, help="CSV of size,loss[,weight] rows")
    p_fit.add_argument("--floor", action="store_true", help="also fit the loss floor")
    p_fit.set_defaults(func=_cmd_fit)

    p_cmp = sub.add_parser("compare-estimation",
                           help="amortized vs exhaustive curve estimation")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=_cmd_compare_estimation)

    p_plot = sub.add_parser("plot-data", help="emit long-format plot rows from a report")
    p_plot.add_argument("--report", required=True, help="directory holding raw.csv")
    p_plot.add_argument("--out", default=None)
    p_plot.set_defaults(func=_cmd_plot_data)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (InsufficientDataError, DegenerateFitError, InvalidProblemError,
            NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
