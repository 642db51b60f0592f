"""Command-line entry point: ``mdcsim {run,sweep,compare,cdf,validate-config}``.

Exit codes: 0 success, 2 configuration or argument error, 3 I/O error,
4 a finished run failed its conservation check.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

from . import engine, plotting
from .config import ConfigError, SimulationConfig, dump_config, load_config, parse_range
from .metrics import (
    CDF_COLUMNS,
    COMPARE_COLUMNS,
    RUN_COLUMNS,
    SWEEP_COLUMNS,
    MetricsReport,
    cdf_rows,
    completion_time_cdf,
    conservation_check,
    improvement_percent,
    mean,
    write_table,
)

log = logging.getLogger("mdcsim")

OUT_ENV = "MDCSIM_OUT"
DEFAULT_OUT = "mdcsim-out"

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantViolation(RuntimeError):
    pass


def _header(command: str, config: SimulationConfig, extra: Sequence[str] = ()) -> list[str]:
    return [f"mdcsim {command}", f"master_seed = {config.seed}", *extra, *(f"config {line}" for line in dump_config(config))]


def _check(reports: Sequence[MetricsReport]) -> None:
    bad = [r for r in reports if not conservation_check(r)]
    if bad:
        r = bad[0]
        raise InvariantViolation(
            f"conservation check failed for {len(bad)} run(s); first: capacity={r.capacity} arm={r.arm} seed={r.seed}"
        )


def _improvement(s_with: float, s_without: float, basis: str) -> float:
    try:
        return improvement_percent(s_with, s_without, basis)
    except ZeroDivisionError:
        return float("nan")


def compare_rows(pairs, basis: str = "with") -> list[dict]:
    """Per-seed paired rows plus a final ``mean`` row."""
    rows = []
    for w, wo in pairs:
        rows.append(
            {
                "seed": w.seed,
                "serviced_with": w.requests_serviced,
                "serviced_without": wo.requests_serviced,
                "dropped_with": w.requests_dropped,
                "dropped_without": wo.requests_dropped,
                "improvement_pct": _improvement(w.requests_serviced, wo.requests_serviced, basis),
            }
        )
    s_with = mean([w.requests_serviced for w, _ in pairs])
    s_without = mean([wo.requests_serviced for _, wo in pairs])
    rows.append(
        {
            "seed": "mean",
            "serviced_with": s_with,
            "serviced_without": s_without,
            "dropped_with": mean([w.requests_dropped for w, _ in pairs]),
            "dropped_without": mean([wo.requests_dropped for _, wo in pairs]),
            "improvement_pct": _improvement(s_with, s_without, basis),
        }
    )
    return rows


def cmd_compare(config: SimulationConfig, seed_count: int, jobs: int = 1):
    """Paired handler-on/off runs; returns ``(pairs, rows)``."""
    pairs = engine.run_pairs(config, seed_count, jobs)
    return pairs, compare_rows(pairs, config.improvement_basis)


def cmd_sweep(config: SimulationConfig, capacity_spec: str | Sequence[int], iterations: int, jobs: int = 1):
    capacities = parse_range(capacity_spec) if isinstance(capacity_spec, str) else tuple(capacity_spec)
    return engine.run_sweep(config, capacities, iterations, jobs)


ARMS = {"both": (True, False), "with": (True,), "without": (False,)}


def cmd_cdf(config: SimulationConfig, arms: str = "both", seed_count: int = 1, jobs: int = 1):
    """Completion times pooled over paired seeds, per arm; returns ``(reports, times_by_arm)``."""
    if arms not in ARMS:
        raise ValueError(f"arms must be one of {sorted(ARMS)}, got {arms!r}")
    seeds = engine.paired_seeds(config.seed, seed_count, config.aggregate_capacity)
    jobs_list = [
        (config.replace(seed=s, handler_enabled=h), config.aggregate_capacity)
        for s in seeds
        for h in ARMS[arms]
    ]
    reports = engine.run_many(jobs_list, jobs)
    times = {}
    for h in ARMS[arms]:
        arm = "with" if h else "without"
        times[arm] = [t for r in reports if r.arm == arm for t in r.completion_times]
    return reports, times


def _outdir(args) -> str:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    os.makedirs(out, exist_ok=True)
    return out


def _resolve(args) -> SimulationConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"simulation.seed={args.seed}")
    return load_config(args.config, overrides)


def _run(args) -> int:
    config = _resolve(args)
    report = engine.run(config)
    _check([report])
    out = _outdir(args)
    comments = _header("run", config)
    write_table(os.path.join(out, "run_summary.csv"), RUN_COLUMNS, [report.summary_row()], comments)
    write_table(os.path.join(out, "cdf.csv"), CDF_COLUMNS, [dict(zip(CDF_COLUMNS, r)) for r in cdf_rows(report.arm, report.completion_times)], comments)
    if not args.no_plots:
        plotting.plot_potential(report, os.path.join(out, "potential.png"), f"seed={config.seed}")
    row = report.summary_row()
    print(", ".join(f"{k}={row[k]}" for k in RUN_COLUMNS))
    return EXIT_OK


def _sweep(args) -> int:
    config = _resolve(args)
    capacities = parse_range(args.capacities) if args.capacities else config.sweep_capacities
    iterations = args.iterations or config.iterations
    sweep = cmd_sweep(config, capacities, iterations, args.jobs)
    _check(sweep.runs)
    out = _outdir(args)
    comments = _header("sweep", config, [f"capacities = {','.join(map(str, capacities))}", f"iterations = {iterations}"])
    write_table(os.path.join(out, "sweep_summary.csv"), SWEEP_COLUMNS, [r.as_row() for r in sweep.rows], comments)
    write_table(os.path.join(out, "sweep_runs.csv"), RUN_COLUMNS, [r.summary_row() for r in sweep.runs], comments)
    if not args.no_plots:
        plotting.plot_sweep(sweep.rows, out, f"master_seed={config.seed}")
    for r in sweep.rows:
        print(f"capacity={r.capacity} serviced_with={r.mean_serviced_with:g} serviced_without={r.mean_serviced_without:g} improvement_pct={r.improvement_pct:.2f}")
    return EXIT_OK


def _compare(args) -> int:
    config = _resolve(args)
    seed_count = args.iterations or config.iterations
    pairs, rows = cmd_compare(config, seed_count, args.jobs)
    _check([r for pair in pairs for r in pair])
    out = _outdir(args)
    comments = _header("compare", config, [f"seed_count = {seed_count}"])
    write_table(os.path.join(out, "compare.csv"), COMPARE_COLUMNS, rows, comments)
    write_table(os.path.join(out, "compare_runs.csv"), RUN_COLUMNS, [r.summary_row() for pair in pairs for r in pair], comments)
    if not args.no_plots:
        plotting.plot_pairs(pairs, os.path.join(out, "compare.png"), f"master_seed={config.seed}")
    summary = rows[-1]
    print(f"mean serviced with={summary['serviced_with']:g} without={summary['serviced_without']:g} improvement_pct={summary['improvement_pct']:.2f}")
    return EXIT_OK


def _cdf(args) -> int:
    config = _resolve(args)
    seed_count = args.iterations or 1
    reports, times = cmd_cdf(config, args.arms, seed_count, args.jobs)
    _check(reports)
    out = _outdir(args)
    comments = _header("cdf", config, [f"arms = {args.arms}", f"seed_count = {seed_count}"])
    rows = [dict(zip(CDF_COLUMNS, r)) for arm, ts in times.items() for r in cdf_rows(arm, ts)]
    write_table(os.path.join(out, "cdf.csv"), CDF_COLUMNS, rows, comments)
    if not args.no_plots:
        plotting.plot_cdf({arm: completion_time_cdf(ts) for arm, ts in times.items()}, os.path.join(out, "cdf.png"), f"master_seed={config.seed}")
    for arm, ts in times.items():
        print(f"arm={arm} completed={len(ts)}")
    return EXIT_OK


def _validate(args) -> int:
    config = _resolve(args)
    print(f"configuration OK ({config.interface_count} interfaces, {len(config.sweep_capacities)} sweep capacities)")
    for line in dump_config(config):
        print(line)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdcsim", description="Congestion-handler simulator for MPTCP mobile device clouds")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario file (sectioned key = value)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override, e.g. queueing.aggregate_capacity=500 (repeatable)")
    common.add_argument("--seed", type=int, help="master seed override")

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    output.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    output.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    sub.add_parser("run", parents=[common, output], help="single run with the configured arm")
    p = sub.add_parser("sweep", parents=[common, output], help="capacity sweep, both arms")
    p.add_argument("--capacities", metavar="START:STOP:STEP")
    p.add_argument("--iterations", type=int, help="runs per arm per capacity")
    p = sub.add_parser("compare", parents=[common, output], help="paired with/without comparison")
    p.add_argument("--iterations", type=int, help="number of paired seeds")
    p = sub.add_parser("cdf", parents=[common, output], help="completion-time CDF per arm")
    p.add_argument("--arms", choices=sorted(ARMS), default="both")
    p.add_argument("--iterations", type=int, help="number of seeds pooled per arm (default 1)")
    sub.add_parser("validate-config", parents=[common], help="parse and validate only")
    return parser


HANDLERS = {"run": _run, "sweep": _sweep, "compare": _compare, "cdf": _cdf, "validate-config": _validate}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    for name in ("jobs", "iterations"):
        value = getattr(args, name, None)
        if value is not None and value < 1:
            log.error("--%s must be >= 1", name)
            return EXIT_CONFIG
    try:
        return HANDLERS[args.command](args)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        log.error("%s", exc)
        return EXIT_INVARIANT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
