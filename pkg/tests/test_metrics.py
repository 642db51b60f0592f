import math
from collections import Counter

import pytest

from mdcsim.metrics import (
    CDF_COLUMNS,
    RUN_COLUMNS,
    SWEEP_COLUMNS,
    MetricsReport,
    SweepReport,
    SweepRow,
    cdf_at,
    cdf_rows,
    completion_time_cdf,
    conservation_check,
    export_table,
    improvement_percent,
    read_table,
    render_table,
    sweep_row,
    write_table,
)


@pytest.mark.parametrize("a,b,pct", [(100, 37, 63.0), (50, 50, 0.0), (80, 100, -25.0)])
def test_improvement_examples(a, b, pct):
    assert improvement_percent(a, b) == pytest.approx(pct)


def test_improvement_baseline_normalization():
    assert improvement_percent(150, 100, basis="without") == pytest.approx(50.0)
    with pytest.raises(ValueError):
        improvement_percent(1, 1, basis="median")
    with pytest.raises(ZeroDivisionError):
        improvement_percent(0, 5)


def test_cdf_examples():
    assert completion_time_cdf([5, 5, 10]) == [(5, pytest.approx(2 / 3)), (10, 1.0)]
    assert completion_time_cdf([]) == []


def test_cdf_at_steps():
    pts = completion_time_cdf([5, 5, 10])
    assert cdf_at(pts, 4) == 0.0 and cdf_at(pts, 5) == pytest.approx(2 / 3) and cdf_at(pts, 99) == 1.0


def test_cdf_matches_sort_and_count_oracle():
    import random

    rnd = random.Random(8)
    for _ in range(50):
        times = [rnd.randint(1, 30) for _ in range(rnd.randint(1, 60))]
        srt = sorted(times)
        oracle = [(t, sum(1 for x in srt if x <= t) / len(srt)) for t in sorted(set(srt))]
        assert completion_time_cdf(times) == oracle


def balanced_report(**kw):
    r = MetricsReport(
        capacity=100, arm="with", seed=3, slots=10,
        requests_arrived=10, requests_serviced=4, dropped_forced=2, dropped_overflow_requests=1,
        dropped_deadline=1, requests_in_flight=2,
        packets_arrived=100, packets_delivered=60, packets_dropped_forced=20,
        packets_dropped_overflow=5, packets_dropped_deadline=5, packets_residual=10,
        completion_times=[1, 2, 3, 4], completion_deadlines=[5, 5, 5, 5], potential_series=[1.0, 0.5],
    )
    for k, v in kw.items():
        setattr(r, k, v)
    return r


def test_conservation_check_accepts_balanced_and_zero():
    assert conservation_check(balanced_report())
    assert conservation_check(MetricsReport())


def test_conservation_check_mutations():
    assert not conservation_check(balanced_report(requests_serviced=5))
    assert not conservation_check(balanced_report(packets_residual=11))
    assert not conservation_check(balanced_report(completion_times=[1, 2, 3, 9]))


def test_requests_dropped_sums_causes():
    assert balanced_report().requests_dropped == 4


def test_run_export_round_trip(tmp_path):
    rep = balanced_report()
    path = tmp_path / "run.csv"
    export_table(rep, path, ["master_seed = 3"])
    cols, rows = read_table(path)
    assert cols == list(RUN_COLUMNS)
    assert rows == [rep.summary_row()]
    first = path.read_bytes()
    export_table(rep, path, ["master_seed = 3"])
    assert path.read_bytes() == first
    assert first.startswith(b"# master_seed = 3\n") and b"\r" not in first


def test_sweep_export_has_one_row_per_capacity(tmp_path):
    rows = [SweepRow(c, 1.0, 0.5, 0.25, 2.0, 50.0) for c in range(100, 1001, 100)]
    path = tmp_path / "sweep.csv"
    export_table(SweepReport(rows), path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS) and len(lines) == 11


def test_cdf_export_two_rows(tmp_path):
    path = tmp_path / "cdf.csv"
    export_table(cdf_rows("with", [5, 5, 10]), path)
    cols, rows = read_table(path)
    assert cols == list(CDF_COLUMNS) and len(rows) == 2
    assert rows[0]["cumulative_fraction"] == 2 / 3


def test_header_only_table():
    assert render_table(CDF_COLUMNS, []) == "arm,time_slots,cumulative_fraction\n"


def test_write_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        write_table(bad, CDF_COLUMNS, [])


def test_export_rejects_unknown():
    with pytest.raises(TypeError):
        export_table(object(), "unused.csv")


def test_sweep_row_single_iteration_equals_run():
    w, wo = balanced_report(requests_serviced=8), balanced_report(arm="without")
    row = sweep_row(100, [w], [wo])
    assert row.mean_serviced_with == 8 and row.mean_serviced_without == 4
    assert row.improvement_pct == pytest.approx(50.0)
    assert math.isnan(sweep_row(100, [MetricsReport()], [MetricsReport()]).improvement_pct)


def test_cdf_rows_counts():
    rows = cdf_rows("without", [3, 1, 3, 2])
    assert [r[1] for r in rows] == [1, 2, 3]
    assert Counter(r[0] for r in rows) == {"without": 3}
