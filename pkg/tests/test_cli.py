import json

import pytest

from dpsqlp.__main__ import main


@pytest.fixture
def records_file(tmp_path):
    path = tmp_path / "stream.csv"
    assert main(["generate", "--users", "60", "--key-space", "15", "--seed", "3", "--out", str(path)]) == 0
    return path


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert "usage" in capsys.readouterr().out


def test_generate_requires_output():
    with pytest.raises(SystemExit):
        main(["generate"])


def test_generate_writes_header(records_file):
    assert records_file.read_text().splitlines()[0] == "key,value,timestamp,user_id"


def test_run_then_evaluate(records_file, tmp_path, capsys):
    releases = tmp_path / "releases.jsonl"
    report = tmp_path / "report.json"
    code = main([
        "run", "--input", str(records_file), "--triggers", "6", "--c", "4",
        "--no-results", "--out", str(releases), "--report", str(report),
    ])
    assert code == 0
    assert "Run id:" in capsys.readouterr().out
    assert json.loads(report.read_text())["engine"] == "dpsqlp"
    for line in releases.read_text().splitlines():
        assert set(json.loads(line)) == {"window", "trigger", "key", "column", "value"}

    utility = tmp_path / "utility.json"
    code = main([
        "evaluate", "--dp", str(releases), "--truth", str(records_file),
        "--triggers", "6", "--out", str(utility),
    ])
    assert code == 0
    assert set(json.loads(utility.read_text())) == {"engine", "retained_keys", "l_inf", "l1", "l2"}


def test_run_records_report_in_results_db(records_file, tmp_path, capsys):
    db = str(tmp_path / "results.duckdb")
    assert main(["run", "--input", str(records_file), "--triggers", "4", "--results-db", db]) == 0
    assert main(["inspect", "--results-db", db, "--stats"]) == 0
    assert "run-report: 1" in capsys.readouterr().out


def test_invalid_budget_is_an_error(records_file, capsys):
    code = main(["run", "--input", str(records_file), "--epsilon", "-1", "--no-results"])
    assert code == 1
    assert "epsilon" in capsys.readouterr().err


def test_missing_input_is_an_error(tmp_path, capsys):
    assert main(["run", "--input", str(tmp_path / "absent.csv"), "--no-results"]) == 1
    assert "no such input file" in capsys.readouterr().err


def test_compare_on_synthetic_stream(tmp_path):
    out = tmp_path / "compare.json"
    code = main([
        "compare", "--users", "80", "--key-space", "10", "--triggers", "4",
        "--c", "3", "--no-results", "--out", str(out),
    ])
    assert code == 0
    assert set(json.loads(out.read_text())) == {"dpsqlp", "baseline1", "baseline2"}


def test_sweep_writes_rows(tmp_path):
    rows = tmp_path / "sweep.csv"
    code = main([
        "sweep", "--users", "80", "--key-space", "10", "--triggers", "4",
        "--c-values", "1,3", "--repeats", "2", "--no-results", "--csv", str(rows),
    ])
    assert code == 0
    assert len(rows.read_text().splitlines()) == 1 + 4


def test_suggest_c(tmp_path, capsys):
    path = tmp_path / "stream.csv"
    lines = [f"k,1,{n},heavy" for n in range(10)] + [f"k,1,{n},u{n}" for n in range(9)]
    path.write_text("\n".join(lines) + "\n")
    assert main(["suggest-c", "--input", str(path), "--percentile", "50"]) == 0
    assert "C=1" in capsys.readouterr().out


def test_non_finite_row_is_an_error(tmp_path, capsys):
    path = tmp_path / "stream.csv"
    path.write_text("k,1,1,u1\nk,nan,2,u2\n")
    assert main(["run", "--input", str(path), "--no-results"]) == 1
    assert "line 2" in capsys.readouterr().err
