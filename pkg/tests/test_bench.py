import csv
import io
import math

import pytest

from treebest.bench import (
    METHODS,
    RECORD_COLUMNS,
    SUMMARY_COLUMNS,
    BenchRecord,
    _record,
    run_benchmark,
    summarize,
    write_records,
    write_summary,
)
from treebest.generate import RandomTreeConfig, generate_tree
from treebest.model import Labeling
from treebest.oracle import enumerate_best
from treebest.report import SolverReport, Status

SMALL = RandomTreeConfig(node_count=8, tree_count=6, seed=5)


@pytest.fixture(scope="module")
def records():
    return run_benchmark(SMALL, k_values=[1, 2, 3, 5], repeats=1)


def csv_rows(recs):
    buf = io.StringIO()
    write_records(recs, buf)
    return list(csv.reader(io.StringIO(buf.getvalue())))


def drop_runtime(rows):
    i = RECORD_COLUMNS.index("runtime_ns")
    return [r[:i] + r[i + 1:] for r in rows]


def test_header_and_shape(records):
    rows = csv_rows(records)
    assert tuple(rows[0]) == RECORD_COLUMNS
    assert len(rows) == 1 + SMALL.tree_count * len(METHODS) * 4


def test_deterministic_modulo_runtime(records):
    again = run_benchmark(SMALL, k_values=[1, 2, 3, 5], repeats=1)
    assert drop_runtime(csv_rows(records)) == drop_runtime(csv_rows(again))


def test_sorted(records):
    keys = [r.sort_key for r in records]
    assert keys == sorted(keys)


def test_k1_ratio_matches_oracle(records):
    for r in records:
        if r.k != 1:
            continue
        assert r.status is Status.SOLVED
        if r.method == "mlayer_dp":
            top = enumerate_best(generate_tree(SMALL, r.tree_index), 2)
            assert r.map_energy == pytest.approx(top[0].energy, abs=1e-9)
            assert r.energy_ratio == pytest.approx(top[1].energy / top[0].energy, abs=1e-9)


def test_solved_records_invariants(records):
    for r in records:
        if r.status is not Status.SOLVED:
            assert r.energy is None and r.energy_ratio is None and r.returned_hamming is None
            continue
        assert r.energy_ratio >= 1 - 1e-9
        if r.method != "divmbest":
            assert r.returned_hamming >= r.k
        assert r.runtime_ns > 0


def test_summary(records):
    rows = summarize(records)
    assert [(s.method, s.k) for s in rows] == [(m, k) for m in METHODS for k in (1, 2, 3, 5)]
    for s in rows:
        group = [r for r in records if (r.method, r.k) == (s.method, s.k)]
        assert s.n_solved + s.n_failed == len(group)
        if s.n_solved:
            assert s.ratio_min <= s.ratio_mean <= s.ratio_max
    buf = io.StringIO()
    write_summary(rows, buf)
    assert tuple(buf.getvalue().splitlines()[0].split(",")) == SUMMARY_COLUMNS


def test_near_zero_map_flags_difference():
    best = Labeling((0, 0), 0.0)
    report = SolverReport(Status.SOLVED, "mlayer_dp", [Labeling((1, 0), 0.25)], [1], runtime_ns=7)
    rec = _record(SMALL, 0, "mlayer_dp", 1, best, report)
    assert rec.ratio_is_difference and rec.energy_ratio == 0.25
    assert isinstance(rec, BenchRecord) and not math.isnan(rec.energy_ratio)


def test_empty_cells_for_failures():
    rec = BenchRecord(0, 0, "mlayer_dp", 3, Status.NO_VALID, 1.5, None, None, None, 10)
    assert csv_rows([rec])[1] == ["0", "0", "mlayer_dp", "3", str(Status.NO_VALID), "1.5", "", "", "", "10"]


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_benchmark(SMALL, methods=["exhaustive"])
    with pytest.raises(ValueError):
        run_benchmark(SMALL, repeats=0)
