import csv
import io
import math

import numpy as np
import pytest

from opaque_mnl import BedConfig, InstanceError, export, generate_bed, run_bench
from opaque_mnl.experiments import CSV_HEADER, format_table, load_summary, summary_csv


@pytest.fixture(scope="module")
def small_summary():
    cfg = BedConfig(instances=12, max_n=4, seed=3)
    return run_bench(generate_bed(cfg), [2, 3, 4], config=cfg)


def test_bed_is_deterministic():
    cfg = BedConfig(instances=5, max_n=6, seed=11)
    a, b = generate_bed(cfg), generate_bed(cfg)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.v, y.v)
        np.testing.assert_array_equal(x.r, y.r)
    other = generate_bed(BedConfig(instances=5, max_n=6, seed=12))
    assert not np.array_equal(a[0].r, other[0].r)


def test_bed_instance_stream_independent_of_count():
    few = generate_bed(BedConfig(instances=3, max_n=5, seed=2))
    many = generate_bed(BedConfig(instances=30, max_n=5, seed=2))
    np.testing.assert_array_equal(few[2].v, many[2].v)


def test_lognormal_medians():
    bed = generate_bed(BedConfig())
    r = np.concatenate([inst.r for inst in bed])
    v = np.concatenate([inst.v for inst in bed])
    assert r.size == 2000 * 9
    assert np.median(r) == pytest.approx(math.exp(0.5), rel=0.05)
    assert np.median(v) == pytest.approx(1.0, rel=0.02)
    assert np.std(np.log(v)) == pytest.approx(0.3, rel=0.05)


def test_config_validation():
    with pytest.raises(InstanceError):
        BedConfig(instances=0)
    with pytest.raises(InstanceError):
        BedConfig(max_n=1)
    with pytest.raises(InstanceError):
        BedConfig(price_sigma=0)


def test_n2_has_no_gap(small_summary):
    row = small_summary.row(2)
    assert row.suboptimal_count == 0
    assert row.max_gap_pct == 0.0


def test_rows_are_consistent(small_summary):
    for row in small_summary.rows:
        assert 0 <= row.opaque_count <= 12
        assert 0 <= row.suboptimal_count <= 12
        assert 0 <= row.avg_gap_pct <= row.max_gap_pct <= 50
        assert 1 <= row.avg_opt_size <= row.n
    with pytest.raises(KeyError):
        small_summary.row(9)


def test_csv_layout(small_summary):
    rows = list(csv.reader(io.StringIO(summary_csv(small_summary))))
    assert rows[0] == CSV_HEADER
    assert [int(r[0]) for r in rows[1:]] == [2, 3, 4]
    assert all(len(r) == 6 for r in rows)


def test_json_round_trip(small_summary, tmp_path):
    path = export(small_summary, tmp_path / "s.json", "json")
    back = load_summary(path)
    assert back.rows == small_summary.rows
    assert back.instances == 12
    assert back.config["seed"] == 3
    with pytest.raises(InstanceError):
        export(small_summary, tmp_path / "s.txt", "xml")


def test_empty_n_values_gives_header_only():
    summary = run_bench(generate_bed(BedConfig(instances=2, max_n=3)), [])
    assert summary_csv(summary) == ",".join(CSV_HEADER) + "\n"


def test_n_larger_than_bed_rejected():
    bed = generate_bed(BedConfig(instances=2, max_n=3))
    with pytest.raises(InstanceError):
        run_bench(bed, [4])


def test_parallel_matches_serial():
    cfg = BedConfig(instances=6, max_n=4, seed=5)
    bed = generate_bed(cfg)
    assert run_bench(bed, [2, 4], jobs=2).rows == run_bench(bed, [2, 4]).rows


def test_format_table(small_summary):
    text = format_table(small_summary)
    assert len(text.splitlines()) == 4
