"""Run counters, derived statistics and comma-separated export."""

from __future__ import annotations

import csv
import io
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

RUN_COLUMNS = (
    "capacity",
    "arm",
    "seed",
    "requests_arrived",
    "requests_serviced",
    "dropped_forced",
    "dropped_overflow",
    "dropped_deadline",
    "offload_events",
    "evacuations",
    "timeouts",
    "p_mdc_final",
)
SWEEP_COLUMNS = (
    "capacity",
    "mean_serviced_with",
    "mean_serviced_without",
    "mean_dropped_with",
    "mean_dropped_without",
    "improvement_pct",
)
CDF_COLUMNS = ("arm", "time_slots", "cumulative_fraction")
COMPARE_COLUMNS = (
    "seed",
    "serviced_with",
    "serviced_without",
    "dropped_with",
    "dropped_without",
    "improvement_pct",
)


def arm_name(handler_enabled: bool) -> str:
    return "with" if handler_enabled else "without"


@dataclass
class MetricsReport:
    capacity: int = 0
    arm: str = "with"
    seed: int = 0
    slots: int = 0
    requests_arrived: int = 0
    requests_serviced: int = 0
    dropped_forced: int = 0
    dropped_overflow_requests: int = 0
    dropped_deadline: int = 0
    requests_in_flight: int = 0
    packets_arrived: int = 0
    packets_delivered: int = 0
    packets_dropped_forced: int = 0
    packets_dropped_overflow: int = 0
    packets_dropped_deadline: int = 0
    packets_residual: int = 0
    offload_events: int = 0
    packets_offloaded: int = 0
    evacuations: int = 0
    timeouts: int = 0
    completion_times: list = field(default_factory=list)
    completion_deadlines: list = field(default_factory=list)
    potential_series: list = field(default_factory=list)
    config: Any = None

    @property
    def requests_dropped(self) -> int:
        return self.dropped_forced + self.dropped_overflow_requests + self.dropped_deadline

    @property
    def p_mdc_final(self) -> float:
        return self.potential_series[-1] if self.potential_series else 1.0

    def summary_row(self) -> dict:
        return {
            "capacity": self.capacity,
            "arm": self.arm,
            "seed": self.seed,
            "requests_arrived": self.requests_arrived,
            "requests_serviced": self.requests_serviced,
            "dropped_forced": self.dropped_forced,
            "dropped_overflow": self.dropped_overflow_requests,
            "dropped_deadline": self.dropped_deadline,
            "offload_events": self.offload_events,
            "evacuations": self.evacuations,
            "timeouts": self.timeouts,
            "p_mdc_final": self.p_mdc_final,
        }


@dataclass
class SweepRow:
    capacity: int
    mean_serviced_with: float
    mean_serviced_without: float
    mean_dropped_with: float
    mean_dropped_without: float
    improvement_pct: float

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in SWEEP_COLUMNS}


@dataclass
class SweepReport:
    rows: list
    runs: list = field(default_factory=list)
    master_seed: int = 0
    iterations: int = 1

    def row(self, capacity: int) -> SweepRow:
        for r in self.rows:
            if r.capacity == capacity:
                return r
        raise KeyError(capacity)


def improvement_percent(serviced_with: float, serviced_without: float, basis: str = "with") -> float:
    """Relative gain of the handler arm, in percent.

    ``basis="with"`` normalizes by the handler arm's count,
    ``basis="without"`` by the baseline's.
    """
    if basis not in ("with", "without"):
        raise ValueError(f"basis must be 'with' or 'without', got {basis!r}")
    denom = serviced_with if basis == "with" else serviced_without
    if denom <= 0:
        raise ZeroDivisionError(f"improvement undefined: serviced_{basis} = {denom}")
    return 100.0 * (serviced_with - serviced_without) / denom


def completion_time_cdf(times: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical CDF as (distinct time, cumulative fraction) points."""
    counts = Counter(times)
    n = sum(counts.values())
    out = []
    acc = 0
    for t in sorted(counts):
        acc += counts[t]
        out.append((t, acc / n))
    return out


def cdf_at(points: Sequence[tuple[float, float]], t: float) -> float:
    """Evaluate a step CDF (as produced by :func:`completion_time_cdf`) at ``t``."""
    value = 0.0
    for x, f in points:
        if x > t:
            break
        value = f
    return value


def conservation_check(report: MetricsReport) -> bool:
    """True iff request- and packet-level bookkeeping both balance exactly."""
    r = report
    requests_ok = r.requests_arrived == (
        r.requests_serviced
        + r.dropped_forced
        + r.dropped_overflow_requests
        + r.dropped_deadline
        + r.requests_in_flight
    )
    packets_ok = r.packets_arrived == (
        r.packets_delivered
        + r.packets_dropped_forced
        + r.packets_dropped_overflow
        + r.packets_dropped_deadline
        + r.packets_residual
    )
    counts = [
        r.requests_arrived, r.requests_serviced, r.dropped_forced, r.dropped_overflow_requests,
        r.dropped_deadline, r.requests_in_flight, r.packets_arrived, r.packets_delivered,
        r.packets_dropped_forced, r.packets_dropped_overflow, r.packets_dropped_deadline,
        r.packets_residual,
    ]
    timing_ok = len(r.completion_times) == r.requests_serviced and all(
        t <= d for t, d in zip(r.completion_times, r.completion_deadlines)
    )
    return requests_ok and packets_ok and timing_ok and min(counts) >= 0


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(columns: Sequence[str], rows: Iterable[dict], comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_table(
    path: os.PathLike | str,
    columns: Sequence[str],
    rows: Iterable[dict],
    comments: Sequence[str] = (),
) -> None:
    text = render_table(columns, rows, comments)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write table to {os.fspath(path)}: {exc.strerror or exc}") from exc


def export_table(obj: Any, path: os.PathLike | str, comments: Sequence[str] = ()) -> None:
    """Write a run report (or list of them), a sweep report, or CDF rows as CSV.

    CDF rows are ``(arm, time_slots, cumulative_fraction)`` tuples.
    """
    if isinstance(obj, MetricsReport):
        write_table(path, RUN_COLUMNS, [obj.summary_row()], comments)
    elif isinstance(obj, SweepReport):
        write_table(path, SWEEP_COLUMNS, [r.as_row() for r in obj.rows], comments)
    elif isinstance(obj, (list, tuple)) and all(isinstance(r, MetricsReport) for r in obj):
        write_table(path, RUN_COLUMNS, [r.summary_row() for r in obj], comments)
    elif isinstance(obj, (list, tuple)):
        rows = [dict(zip(CDF_COLUMNS, r)) for r in obj]
        write_table(path, CDF_COLUMNS, rows, comments)
    else:
        raise TypeError(f"don't know how to export {type(obj).__name__}")


def _coerce(text: str) -> Any:
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_table(path: os.PathLike | str) -> tuple[list[str], list[dict]]:
    """Parse an exported table back into (columns, rows), skipping ``#`` comment lines."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
    except OSError as exc:
        raise OSError(f"cannot read table {os.fspath(path)}: {exc.strerror or exc}") from exc
    reader = csv.reader(lines)
    columns = next(reader, [])
    rows = [{c: _coerce(v) for c, v in zip(columns, rec)} for rec in reader]
    return columns, rows


def cdf_rows(arm: str, times: Iterable[float]) -> list[tuple[str, float, float]]:
    return [(arm, t, f) for t, f in completion_time_cdf(times)]


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def sweep_row(capacity: int, with_runs: Sequence[MetricsReport], without_runs: Sequence[MetricsReport], basis: str = "with") -> SweepRow:
    s_with = mean([r.requests_serviced for r in with_runs])
    s_without = mean([r.requests_serviced for r in without_runs])
    try:
        pct = improvement_percent(s_with, s_without, basis)
    except ZeroDivisionError:
        pct = math.nan
    return SweepRow(
        capacity,
        s_with,
        s_without,
        mean([r.requests_dropped for r in with_runs]),
        mean([r.requests_dropped for r in without_runs]),
        pct,
    )

