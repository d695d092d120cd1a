"""Command-line entry points.

Subcommands:
    simulate <config>                      one deterministic run
    batch <config> --runs N --seed S ...   multi-run batch with aggregation
    analyze <snapshots...>                 recompute metrics from streams
    stability --fg --mt --accel [--sweep]  critical seed size calculator
    fit-magnet <csv>                       fit the magnet force law
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .analysis import aggregate, write_aggregate_csv, write_metrics_csv
from .glue import fit_magnet_params
from .harness import (
    AnalysisParams,
    analyze_stream,
    load_config,
    run_batch,
    run_experiment,
)
from .stability import critical_seed_size, threshold_sweep


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_experiment(config, rng_seed=args.seed, output_dir=args.out)
    last = result.metrics[-1]
    print(f"run seed={result.rng_seed} -> {result.stream_path}")
    print(
        f"final t={last.time:g}s size={last.size} "
        f"(excl. seed {last.size_excluding_seed}) "
        f"errors={last.error_pct:.2f}% holes={last.hole_pct:.2f}%"
    )
    return 0


def _cmd_batch(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_batch(
        config,
        n_runs=args.runs,
        base_seed=args.seed,
        jobs=args.jobs,
        output_dir=args.out,
    )
    for seed, msg in result.failures:
        print(f"run seed={seed} FAILED: {msg}", file=sys.stderr)
    print(
        f"{len(result.completed)}/{args.runs} runs completed; "
        f"aggregate: {result.aggregate_path}"
    )
    if args.charts and result.aggregate_rows:
        from .charts import write_charts

        out = Path(args.out) if args.out else Path(config.output_dir)
        label = config.drive.mode.value
        for p in write_charts({label: result.aggregate_rows}, out):
            print(f"chart: {p}")
    return 1 if result.failures else 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    analysis = AnalysisParams(
        gap_tol_factor=args.gap_tol_factor, angle_tol_deg=args.angle_tol_deg
    )
    all_rows = []
    for path in args.snapshots:
        rows = analyze_stream(path, analysis)
        out = Path(path).with_suffix(".metrics.csv")
        write_metrics_csv(out, rows)
        print(f"{path} -> {out} ({len(rows)} snapshots)")
        all_rows.append(rows)
    if len(all_rows) > 1:
        agg = aggregate(all_rows)
        agg_path = Path(args.snapshots[0]).parent / "aggregate.csv"
        write_aggregate_csv(agg_path, agg)
        print(f"aggregate -> {agg_path}")
    return 0


def _cmd_stability(args: argparse.Namespace) -> int:
    if args.sweep:
        fgs = _parse_floats(args.fg)
        accels = _parse_floats(args.accel)
        writer = csv.writer(sys.stdout)
        writer.writerow(["glue_force_n", "accel_m_s2", "critical_seed_size"])
        for fg, a, n in threshold_sweep(fgs, accels, args.mt):
            writer.writerow([fg, a, f"{n:.6g}"])
    else:
        fg = float(args.fg)
        a = float(args.accel)
        n = critical_seed_size(fg, args.mt, a)
        print(f"critical seed size: {n:.6g} tiles per side")
    return 0


def _cmd_fit_magnet(args: argparse.Namespace) -> int:
    samples = []
    with open(args.csv, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or not row[0].strip():
                continue
            try:
                samples.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header or comment line
    fit = fit_magnet_params(samples, initial=tuple(args.initial))
    print(f"alpha = {fit.alpha:.6g}")
    print(f"beta  = {fit.beta:.6g}")
    print(f"residual (sum sq) = {fit.residual:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbsasim",
        description="Tile-based self-assembly simulator and analysis toolkit.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment from a config file")
    p.add_argument("config", help="YAML experiment config")
    p.add_argument("--seed", type=int, default=None, help="override the rng seed")
    p.add_argument("--out", default=None, help="override the output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("batch", help="run a batch and aggregate the metrics")
    p.add_argument("config", help="YAML experiment config")
    p.add_argument("--runs", type=int, required=True, help="number of runs")
    p.add_argument("--seed", type=int, default=None, help="base rng seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default=None, help="override the output directory")
    p.add_argument("--charts", action="store_true", help="write SVG charts")
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("analyze", help="recompute metrics from snapshot streams")
    p.add_argument("snapshots", nargs="+", help="snapshot stream files")
    p.add_argument("--gap-tol-factor", type=float, default=0.2)
    p.add_argument("--angle-tol-deg", type=float, default=15.0)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stability", help="critical seed size under shaking")
    p.add_argument("--fg", required=True,
                   help="glue holding force in N (comma list with --sweep)")
    p.add_argument("--mt", type=float, default=0.016, help="tile mass in kg")
    p.add_argument("--accel", required=True,
                   help="agitation acceleration in m/s^2 (comma list with --sweep)")
    p.add_argument("--sweep", action="store_true", help="emit a CSV sweep table")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("fit-magnet", help="fit alpha/beta to (distance_cm, force_N)")
    p.add_argument("csv", help="CSV of distance_cm,force_N samples")
    p.add_argument("--initial", type=float, nargs=2, default=(0.1, -0.5),
                   metavar=("ALPHA", "BETA"))
    p.set_defaults(func=_cmd_fit_magnet)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
