import csv
import json
import math

import numpy as np
import pytest

from dpsqlp.bench import (
    ColumnMapping,
    ZipfMandelbrotDist,
    artifact_name,
    average_rows,
    compare,
    final_truth,
    generate_synthetic,
    ground_truth,
    ground_truth_sql,
    histogram_at,
    ingest,
    sweep_contribution_bound,
    utility_metrics,
    write_records,
    write_rows_csv,
)
from dpsqlp.bench.zipf import EXACT_LIMIT, RECORD_COUNT_DIST
from dpsqlp.bounding import Record
from dpsqlp.engine import WindowSpec
from dpsqlp.errors import IngestError, InvalidParameterError
from dpsqlp.storage import DuckDBResultsStore
from tests.streams import random_stream


def rec(key, value, t, user="u"):
    return Record(key=key, value=value, timestamp=t, user_id=user)


class TestZipf:
    def test_two_point_pmf(self):
        dist = ZipfMandelbrotDist(q=0.0, s=1.0, support=2)
        np.testing.assert_allclose(dist.pmf([1, 2]), [2 / 3, 1 / 3])
        assert dist.pmf(3) == 0

    def test_steep_exponent_concentrates_on_one(self):
        dist = ZipfMandelbrotDist(q=0.0, s=60.0, support=1000)
        assert dist.pmf(1) == pytest.approx(1.0)
        assert set(dist.sample(np.random.default_rng(0), 500)) == {1}

    def test_sample_frequencies(self):
        dist = ZipfMandelbrotDist(q=0.0, s=1.0, support=2)
        draws = dist.sample(np.random.default_rng(1), 20_000)
        assert np.mean(draws == 1) == pytest.approx(2 / 3, abs=0.02)

    def test_mean_of_small_support(self):
        dist = ZipfMandelbrotDist(q=0.0, s=1.0, support=2)
        assert dist.mean() == pytest.approx(4 / 3)

    @pytest.mark.parametrize("q,s,support", [(-1.0, 1.0, 10), (0.0, 0.0, 10), (0.0, 1.0, 0), (0.0, 1.0, 1e9)])
    def test_rejects_bad_parameters(self, q, s, support):
        with pytest.raises(InvalidParameterError):
            ZipfMandelbrotDist(q=q, s=s, support=support)

    def test_large_support_uses_tail(self):
        dist = ZipfMandelbrotDist(q=0.0, s=1.1, support=1_000_000_000)
        assert 0.05 < dist.tail_mass / dist.total_mass < 0.11

        draws = dist.sample(np.random.default_rng(2), 4000)
        assert draws.max() <= 1_000_000_000
        assert draws.min() >= 1
        assert 0.05 < np.mean(draws > EXACT_LIMIT) < 0.11

    def test_record_count_distribution(self):
        x = np.arange(1, 11)
        above_ten = 1.0 - RECORD_COUNT_DIST.pmf(x).sum()
        assert 0.13 < above_ten < 0.19


class TestSynthetic:
    def test_no_users(self):
        assert generate_synthetic(0) == []

    def test_negative_users(self):
        with pytest.raises(InvalidParameterError):
            generate_synthetic(-1)

    def test_shape(self):
        window = WindowSpec(start=0.0, length=100.0)
        stream = generate_synthetic(50, key_space=20, seed=1, window=window)
        assert len(stream) >= 50
        assert [r.timestamp for r in stream] == sorted(r.timestamp for r in stream)
        assert all(0.0 <= r.timestamp < 100.0 for r in stream)
        assert {int(r.key[1:]) for r in stream} <= set(range(1, 21))
        assert {int(r.user_id[1:]) for r in stream} <= set(range(50))
        assert {r.value for r in stream} == {1.0}

    def test_deterministic(self):
        assert generate_synthetic(30, seed=4) == generate_synthetic(30, seed=4)
        assert generate_synthetic(30, seed=4) != generate_synthetic(30, seed=5)


class TestIngest:
    def test_headerless_csv(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("cats,1,1500000000,u42\n")
        assert ingest(path) == [rec("cats", 1.0, 1.5e9, "u42")]

    def test_csv_with_header(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("user_id,key,timestamp,value\nu1,dogs,2020-01-01T00:00:00Z,2.5\n")
        (record,) = ingest(path)
        assert record.key == "dogs"
        assert record.value == 2.5
        assert record.timestamp == 1577836800.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("")
        assert ingest(path) == []

    def test_non_numeric_value_aborts(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("a,1,1,u\nb,lots,2,u\n")
        with pytest.raises(IngestError) as info:
            ingest(path)
        assert info.value.line_number == 2

    def test_skip_mode(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("a,1,1,u\nb,lots,2,u\nc,1\n")
        assert [r.key for r in ingest(path, on_error="skip")] == ["a"]

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite_value_aborts(self, tmp_path, bad):
        path = tmp_path / "records.csv"
        path.write_text(f"a,1,1,u\ncats,{bad},10,u1\n")
        with pytest.raises(IngestError, match="non-finite") as info:
            ingest(path)
        assert info.value.line_number == 2

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite_timestamp_aborts(self, tmp_path, bad):
        path = tmp_path / "records.csv"
        path.write_text(f"a,1,1,u\ncats,1,{bad},u1\n")
        with pytest.raises(IngestError, match="not finite") as info:
            ingest(path)
        assert info.value.line_number == 2

    def test_non_finite_json_rows(self, tmp_path):
        path = tmp_path / "records.jsonl"
        rows = [
            {"key": "a", "value": 1, "timestamp": 0, "user_id": "u"},
            {"key": "b", "value": float("nan"), "timestamp": 0, "user_id": "u"},
            {"key": "c", "value": 1, "timestamp": float("-inf"), "user_id": "u"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        assert [r.key for r in ingest(path, on_error="skip")] == ["a"]
        with pytest.raises(IngestError) as info:
            ingest(path)
        assert info.value.line_number == 2

    def test_jsonl_with_mapping(self, tmp_path):
        path = tmp_path / "comments.jsonl"
        rows = [
            {"subreddit": "cats", "author": "bob", "created": "2020-01-01T00:00:00Z"},
            {"subreddit": "dogs", "author": "amy", "created": 1577836801},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n")
        mapping = ColumnMapping.parse("key=subreddit,user_id=author,timestamp=created")
        records = ingest(path, mapping=mapping, count_users=True)
        assert records == [rec("cats", 1.0, 1577836800.0, "bob"), rec("dogs", 1.0, 1577836801.0, "amy")]

    def test_naive_timestamp_is_rejected(self, tmp_path):
        path = tmp_path / "records.jsonl"
        path.write_text(json.dumps({"key": "a", "value": 1, "timestamp": "2020-01-01T00:00:00", "user_id": "u"}))
        with pytest.raises(IngestError, match="timezone"):
            ingest(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "records.jsonl"
        path.write_text(json.dumps({"key": "a", "value": 1, "timestamp": 0}))
        with pytest.raises(IngestError, match="user_id"):
            ingest(path)

    def test_bad_mapping(self):
        with pytest.raises(InvalidParameterError):
            ColumnMapping.parse("owner=author")

    def test_unknown_suffix(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            ingest(tmp_path / "records.parquet")

    def test_written_file_reads_back(self, tmp_path):
        stream = random_stream(0, records=20, values=(-1.0, 1.0))
        path = tmp_path / "out" / "stream.csv"
        assert write_records(path, stream) == 20
        assert ingest(path) == stream


class TestTruth:
    def test_empty(self, window):
        assert ground_truth([], window, 4) == {}
        assert ground_truth_sql([], window, 4) == {}

    def test_cumulative_totals(self, window):
        stream = [rec("a", 1.0, 10.0), rec("a", 2.0, 60.0), rec("b", 5.0, 70.0), rec("a", 3.0, 99.0)]
        table = ground_truth(stream, window, 2)
        assert table[(0, 1)] == {"a": 1.0}
        assert table[(0, 2)] == {"a": 6.0, "b": 5.0}
        assert final_truth(table) == {(0, "a"): 6.0, (0, "b"): 5.0}

    def test_truth_ignores_bounding(self, window):
        stream = [rec("a", 50.0, float(t)) for t in range(10)]
        assert final_truth(ground_truth(stream, window, 1)) == {(0, "a"): 500.0}

    @pytest.mark.parametrize("seed", range(5))
    def test_sql_matches_hash_aggregation(self, window, seed):
        stream = random_stream(seed, records=500, keys=15, windows=3)
        assert ground_truth_sql(stream, window, 7) == ground_truth(stream, window, 7)


class TestMetrics:
    def test_union_of_keys(self):
        report = utility_metrics({"a": 10.0, "b": 5.0}, {"a": 12.0, "c": 3.0})
        assert report.retained_keys == 2
        assert report.l_inf == pytest.approx(5.0)
        assert report.l1 == pytest.approx(10.0)
        assert report.l2 == pytest.approx(math.sqrt(38.0))

    def test_exact_release(self):
        report = utility_metrics({"a": 1.0}, {"a": 1.0})
        assert (report.l_inf, report.l1, report.l2) == (0.0, 0.0, 0.0)

    def test_nothing_released(self):
        report = utility_metrics({}, {"a": 3.0, "b": 4.0})
        assert report.retained_keys == 0
        assert report.l1 == pytest.approx(7.0)
        assert report.l2 == pytest.approx(5.0)

    def test_empty(self):
        assert utility_metrics({}, {}).l1 == 0.0

    def releases(self):
        return [
            {"window": 0, "trigger": 1, "key": "a", "column": "value", "value": 1.0},
            {"window": 0, "trigger": 2, "key": "b", "column": "value", "value": 2.0},
            {"window": 0, "trigger": 3, "key": "a", "column": "value", "value": 4.0},
            {"window": 0, "trigger": 3, "key": "a", "column": "n", "value": 9.0},
        ]

    def test_histogram_carries_latest_release(self):
        assert histogram_at(self.releases()) == {(0, "a"): 4.0, (0, "b"): 2.0}
        assert histogram_at(self.releases(), trigger=2) == {(0, "a"): 1.0, (0, "b"): 2.0}
        assert histogram_at(self.releases(), column="n") == {(0, "a"): 9.0}

    def test_histogram_at_exact_trigger(self):
        assert histogram_at(self.releases(), trigger=3, carry_forward=False) == {(0, "a"): 4.0}
        with pytest.raises(InvalidParameterError):
            histogram_at(self.releases(), carry_forward=False)


class TestExperiment:
    def test_artifact_name(self):
        assert artifact_name("sweep", t=100, seed=3) == "sweep-seed-3-t-100"
        assert artifact_name("Compare Run") == "compare-run"

    def test_average_rows(self):
        rows = [
            {"C": 1, "retained_keys": 4, "l_inf": 1.0, "l1": 2.0, "l2": 1.0},
            {"C": 1, "retained_keys": 6, "l_inf": 3.0, "l1": 4.0, "l2": 3.0},
            {"C": 2, "retained_keys": 1, "l_inf": 0.5, "l1": 0.5, "l2": 0.5},
        ]
        averaged = average_rows(rows)
        assert [r["C"] for r in averaged] == [1, 2]
        assert averaged[0] == {"C": 1, "retained_keys": 5.0, "l_inf": 2.0, "l1": 3.0, "l2": 2.0}

    def test_write_rows_csv(self, tmp_path):
        path = tmp_path / "nested" / "rows.csv"
        write_rows_csv(path, [{"C": 1, "l1": 2.5}, {"C": 2, "l1": 1.0}])
        with open(path, newline="") as f:
            assert list(csv.DictReader(f)) == [{"C": "1", "l1": "2.5"}, {"C": "2", "l1": "1.0"}]

    def test_empty_sweep(self, make_config):
        with pytest.raises(InvalidParameterError):
            sweep_contribution_bound([], make_config(), [])

    def test_sweep_rows(self, make_config):
        stream = random_stream(1, records=300, users=30, keys=6)
        rows = sweep_contribution_bound(stream, make_config(epsilon=2.0), [1, 4])
        assert [(r["engine"], r["C"]) for r in rows] == [("dpsqlp", 1), ("dpsqlp", 4)]
        assert all(r["l1"] >= r["l_inf"] >= 0 for r in rows)

    def test_unknown_engine(self, make_config):
        with pytest.raises(InvalidParameterError):
            compare(random_stream(0), make_config(), engines=["nope"])

    def test_noiseless_compare_is_exact(self, make_config):
        stream = random_stream(3, records=300, users=20, keys=8)
        cfg = make_config(noiseless=True, C=100)
        with DuckDBResultsStore(":memory:") as results:
            out = compare(stream, cfg, results=results)
            assert set(out) == {"dpsqlp", "baseline1", "baseline2"}
            for engine, entry in out.items():
                assert entry["utility"]["l1"] == pytest.approx(0.0, abs=1e-9), engine
                assert entry["utility"]["retained_keys"] == 8
            assert results.stats() == {"run-report": 3, "utility-report": 3}
