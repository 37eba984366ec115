"""Command line front end.

Subcommands:

* match        - passive matching of one rectified pair, maps + metrics out
* active       - closed-loop querying against a ground-truth disparity map
* bench        - runtime scaling measurements for the inference sweeps
* oracle-check - compare the fast passes to brute-force enumeration
* suite        - run the passive/guided/random comparison over a dataset list

Every command validates all inputs before creating any output file, so a
failed run leaves nothing half-written behind.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
from pathlib import Path

import numpy as np

from .dsi import CostModel
from .exceptions import (
    ColumnsExhaustedError,
    DimensionError,
    EnumerationGuardError,
    InfeasibleLatticeError,
    PgmParseError,
    UpdateRejectedError,
)
from .experiments import (
    compare_strategies,
    crop_for_disparity,
    doubling_ratios,
    load_manifest,
    scaling_report,
)
from .image_io import (
    read_ground_truth,
    read_pgm,
    write_conflict_csv,
    write_disparity_pgm,
    write_entropy_pgm,
    write_metrics_csv,
)
from .laser import GroundTruth
from .oracle import selfcheck
from .pipeline import initialize
from .querying import EvenSpreadStrategy, InfoGainStrategy, RandomStrategy


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("cost model")
    group.add_argument("--dl", type=float, default=25.0, help="left occlusion penalty")
    group.add_argument("--dr", type=float, default=25.0, help="right occlusion penalty")
    group.add_argument(
        "--beta", type=float, default=0.1, help="exponent scale from cost to potential"
    )
    group.add_argument(
        "--score-kind",
        choices=("abs", "squared"),
        default="abs",
        help="pixel dissimilarity: absolute or squared difference",
    )
    group.add_argument("--block-cost", type=float, default=1.0e9, help="cost that rules a node out")
    group.add_argument(
        "--soft-cost",
        type=float,
        default=None,
        help="boundary discourage cost (default 15x the larger occlusion penalty)",
    )


def _add_image_args(parser: argparse.ArgumentParser, gt_required: bool) -> None:
    group = parser.add_argument_group("inputs")
    group.add_argument("--left", required=True, help="left image (PGM)")
    group.add_argument("--right", required=True, help="right image (PGM)")
    group.add_argument(
        "--gt",
        required=gt_required,
        help="ground-truth disparity map (PGM)" + ("" if gt_required else ", optional"),
    )
    group.add_argument(
        "--gt-scale",
        type=float,
        default=1.0,
        help="stored ground-truth values divide by this to give disparities",
    )
    group.add_argument(
        "--gt-sentinel",
        type=int,
        default=None,
        help="stored value marking occluded ground-truth pixels",
    )
    group.add_argument(
        "--max-disparity", type=int, default=64, help="number of disparity levels"
    )
    group.add_argument(
        "--crop-right",
        choices=("auto", "off"),
        default="off",
        help="auto: trim right-image columns so the disparity range fits "
        "(for equal-width pairs); off: require widths that already fit",
    )


def _model_from_args(args: argparse.Namespace) -> CostModel:
    return CostModel(
        left_occ_penalty=args.dl,
        right_occ_penalty=args.dr,
        score_scale=args.beta,
        score_kind=args.score_kind,
        block_cost=args.block_cost,
        soft_cost=args.soft_cost,
    )


def _load_pair(args: argparse.Namespace) -> tuple[np.ndarray, np.ndarray, GroundTruth | None]:
    left = read_pgm(args.left).samples.astype(np.float64)
    right = read_pgm(args.right).samples.astype(np.float64)
    gt = None
    if args.gt:
        gt = read_ground_truth(args.gt, scale=args.gt_scale, sentinel=args.gt_sentinel)
    d = args.max_disparity
    if d < 1:
        raise DimensionError(f"--max-disparity must be at least 1, got {d}")
    if args.crop_right == "auto":
        left, right, gt = crop_for_disparity(left, right, gt, d)
    else:
        margin = left.shape[1] - right.shape[1] + 1
        if margin != d:
            raise DimensionError(
                f"--max-disparity {d} does not match the images: left width "
                f"{left.shape[1]} minus right width {right.shape[1]} supports "
                f"{margin} disparity levels (use --crop-right auto to trim)"
            )
    return left, right, gt


def _strategy_from_args(args: argparse.Namespace):
    if args.strategy == "info-gain":
        return InfoGainStrategy()
    if args.strategy == "random":
        if args.seed is None:
            raise ValueError("--strategy random needs --seed for reproducibility")
        return RandomStrategy(args.seed)
    return EvenSpreadStrategy(args.aims)


def cmd_match(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    left, right, gt = _load_pair(args)
    session = initialize(left, right, model, ground_truth=gt, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dmap = session.disparity_map()
    emap = session.entropy_map()
    write_disparity_pgm(out / "disparity.pgm", dmap)
    write_entropy_pgm(out / "entropy.pgm", emap)
    write_metrics_csv(out / "metrics.csv", session.metrics)
    if not args.no_figures:
        from . import plots

        plots.save_map_plot(out / "disparity.png", dmap.values, "Disparity (best path)")
        plots.save_map_plot(out / "entropy.png", emap.values, "Per-pixel state entropy (nats)", cmap="magma")
    record = session.metrics.records[-1]
    line = f"matched {session.num_rows} rows x {session.num_columns} columns, total entropy {record.total_entropy:.6g} nats"
    if record.pixel_errors is not None:
        line += f", {record.pixel_errors} pixels off by more than 1"
    print(line)
    return 0


def cmd_active(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    strategy = _strategy_from_args(args)
    left, right, gt = _load_pair(args)
    session = initialize(
        left,
        right,
        model,
        ground_truth=gt,
        occlusion_update=args.occlusion_update == "on",
        threads=args.threads,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def on_step(live_session, record):
        if args.snapshots > 0 and record.aim_index % args.snapshots == 0:
            write_disparity_pgm(
                out / f"disparity_after_{record.aim_index:03d}.pgm",
                live_session.disparity_map(),
            )

    session.run(args.aims, strategy, on_step=on_step)
    write_metrics_csv(out / "metrics.csv", session.metrics)
    write_conflict_csv(out / "conflicts.csv", session.conflicts)
    dmap = session.disparity_map()
    emap = session.entropy_map()
    write_disparity_pgm(out / "disparity.pgm", dmap)
    write_entropy_pgm(out / "entropy.pgm", emap)
    if not args.no_figures:
        from . import plots

        label = strategy.name
        plots.save_entropy_plot(out / "entropy_vs_aims.png", [(label, session.metrics)])
        plots.save_error_plot(out / "pixel_errors_vs_aims.png", [(label, session.metrics)])
        plots.save_map_plot(out / "disparity.png", dmap.values, "Disparity after querying")
        plots.save_map_plot(out / "entropy.png", emap.values, "Per-pixel state entropy (nats)", cmap="magma")
    first, last = session.metrics.records[0], session.metrics.records[-1]
    print(
        f"fired {session.aim_count} aims ({strategy.name}): entropy "
        f"{first.total_entropy:.6g} -> {last.total_entropy:.6g} nats"
        + (
            f", errors {first.pixel_errors} -> {last.pixel_errors}"
            if last.pixel_errors is not None
            else ""
        )
    )
    if session.conflicts:
        print(f"{len(session.conflicts)} conflicting answers were skipped (see conflicts.csv)")
    if session.rejected_updates:
        print(f"{len(session.rejected_updates)} updates were rejected to keep lattices connected")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    points = scaling_report(
        args.columns,
        args.disparities,
        args.anchor_columns,
        args.anchor_disparities,
        repeats=args.repeats,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["columns", "disparities", "nodes", "seconds"])
        for p in points:
            writer.writerow(
                [p.num_columns, p.num_disparities, p.num_columns * p.num_disparities, f"{p.seconds:.6g}"]
            )
    for p in points:
        print(
            f"n={p.num_columns:>6} d={p.num_disparities:>5}: {p.seconds * 1e3:8.2f} ms per sweep set"
        )
    worst = 0.0
    for label, ratio in doubling_ratios(points):
        print(f"doubling {label}: x{ratio:.2f}")
        worst = max(worst, ratio)
    if worst > 0.0:
        print(f"worst doubling ratio x{worst:.2f}")
    if not args.no_figures:
        from . import plots

        plots.save_bench_plot(
            out / "bench.png",
            [(p.num_columns, p.num_disparities, p.seconds) for p in points],
        )
    return 0


def cmd_oracle_check(args: argparse.Namespace) -> int:
    ok, lines = selfcheck(args.seed, count=args.count, tol=args.tol, corrupt=args.corrupt)
    for line in lines:
        print(line)
    return 0 if ok else 1


def cmd_suite(args: argparse.Namespace) -> int:
    specs = load_manifest(args.manifest)
    model = _model_from_args(args)
    rows = []
    for spec in specs:
        left = read_pgm(spec.left).samples.astype(np.float64)
        right = read_pgm(spec.right).samples.astype(np.float64)
        gt = read_ground_truth(spec.gt, scale=spec.gt_scale, sentinel=spec.gt_sentinel)
        left, right, gt = crop_for_disparity(left, right, gt, spec.max_disparity)
        seeds = list(range(args.seed, args.seed + args.random_runs))
        guided, randoms = compare_strategies(
            left, right, gt, model, args.aims, seeds, threads=args.threads
        )
        passive = guided.records[0].pixel_errors
        active = guided.records[-1].pixel_errors
        random_mean = statistics.fmean(m.records[-1].pixel_errors for m in randoms)
        rows.append((spec.name, passive, active, random_mean))
        print(
            f"{spec.name}: passive {passive}, guided {active}, "
            f"random mean {random_mean:.1f} (over {len(seeds)} runs, {args.aims} aims)"
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "suite.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["dataset", "aims", "passive_errors", "active_errors", "random_mean_errors"]
        )
        for name, passive, active, random_mean in rows:
            writer.writerow([name, args.aims, passive, active, f"{random_mean:.12g}"])
    if not args.no_figures:
        from . import plots

        plots.save_suite_plot(out / "suite.png", rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="activestereo",
        description="Scanline stereo with path posteriors and entropy-guided queries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_match = sub.add_parser("match", help="passive matching, write maps and metrics")
    _add_image_args(p_match, gt_required=False)
    _add_model_args(p_match)
    p_match.add_argument("--threads", type=int, default=1)
    p_match.add_argument("--out", required=True, help="output directory")
    p_match.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p_match.set_defaults(func=cmd_match)

    p_active = sub.add_parser("active", help="closed-loop querying against ground truth")
    _add_image_args(p_active, gt_required=True)
    _add_model_args(p_active)
    p_active.add_argument("--aims", type=int, default=9, help="number of queries to fire")
    p_active.add_argument(
        "--strategy", choices=("info-gain", "random", "even"), default="info-gain"
    )
    p_active.add_argument("--seed", type=int, default=None, help="seed for --strategy random")
    p_active.add_argument(
        "--occlusion-update",
        choices=("on", "off"),
        default="on",
        help="fold occluded answers in as match blocks at that column",
    )
    p_active.add_argument("--threads", type=int, default=1)
    p_active.add_argument(
        "--snapshots",
        type=int,
        default=0,
        help="write a disparity map every N aims (0 = off)",
    )
    p_active.add_argument("--out", required=True, help="output directory")
    p_active.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p_active.set_defaults(func=cmd_active)

    p_bench = sub.add_parser("bench", help="runtime scaling of the inference sweeps")
    p_bench.add_argument("--columns", type=int, nargs="+", default=[1000, 2000, 4000])
    p_bench.add_argument("--disparities", type=int, nargs="+", default=[128, 256, 512])
    p_bench.add_argument("--anchor-columns", type=int, default=2000)
    p_bench.add_argument("--anchor-disparities", type=int, default=256)
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser(
        "oracle-check", help="verify the fast passes against brute-force enumeration"
    )
    p_oracle.add_argument("--count", type=int, default=100, help="number of random lattices")
    p_oracle.add_argument("--seed", type=int, default=1)
    p_oracle.add_argument("--tol", type=float, default=1.0e-9, help="relative tolerance")
    p_oracle.add_argument(
        "--corrupt",
        action="store_true",
        help="inject a deliberate mismatch to prove the check can fail",
    )
    p_oracle.set_defaults(func=cmd_oracle_check)

    p_suite = sub.add_parser(
        "suite", help="passive/guided/random comparison over a dataset manifest"
    )
    p_suite.add_argument("--manifest", required=True, help="JSON list of datasets")
    _add_model_args(p_suite)
    p_suite.add_argument("--aims", type=int, default=9)
    p_suite.add_argument("--random-runs", type=int, default=10)
    p_suite.add_argument("--seed", type=int, default=0, help="base seed for the random runs")
    p_suite.add_argument("--threads", type=int, default=1)
    p_suite.add_argument("--out", required=True, help="output directory")
    p_suite.add_argument("--no-figures", action="store_true", help="skip PNG figure rendering")
    p_suite.set_defaults(func=cmd_suite)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        DimensionError,
        PgmParseError,
        InfeasibleLatticeError,
        UpdateRejectedError,
        ColumnsExhaustedError,
        EnumerationGuardError,
        ValueError,
        KeyError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
