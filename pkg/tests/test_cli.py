import json
import subprocess
import sys

import pytest

from online_checkpointing.cli import main, parse_budget, parse_ks


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_simple(capsys):
    code, out, _ = run(capsys, "simulate", "--alg", "simple", "--periods", "5", "--json")
    assert code == 0
    doc = json.loads(out)
    assert (doc["k"], doc["n"]) == (3, 1)
    assert f"{doc['perf']:.6f}" == "1.527864"


def test_simulate_binary_rows(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    summary = tmp_path / "summary.json"
    code, _, err = run(capsys, "simulate", "--alg", "binary:k=16", "--periods", "1",
                       "--out", str(trace), "--summary", str(summary))
    assert code == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "step,time,q,interval_lo,interval_hi"
    assert len(lines) - 1 == 8
    assert set(json.loads(summary.read_text())) >= {"k", "n", "gamma", "perf"}
    assert "perf=" in err


def test_simulate_zero_periods(capsys):
    code, out, _ = run(capsys, "simulate", "--alg", "linear:k=5", "--periods", "0")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("5,")


@pytest.mark.parametrize("text", ["foo", "binary:k=12", "linear:k=1", "simple:k=4"])
def test_invalid_algorithm_is_usage_error(text, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--alg", text])
    assert exc.value.code != 0


def test_missing_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code != 0


def test_bounds_table_and_json(capsys):
    code, out, _ = run(capsys, "bounds", "--k", "1024")
    assert code == 0 and "1.39254" in out
    code, out, _ = run(capsys, "bounds", "--k", "1024", "--json")
    assert json.loads(out)["binary_upper"] == pytest.approx(1.3925443611198906)


def test_optimize_writes_stable_json(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, out, _ = run(capsys, "optimize", "--k", "3", "--pattern", "1",
                           "--gamma-step", "1e-2", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["pattern"] == [1]
    assert set(doc) >= {"gamma", "lambda", "positions", "constraint_counts", "solves"}
    assert doc["algorithm"]["k"] == 3


def test_optimize_fixed_gamma(capsys):
    code, out, _ = run(capsys, "optimize", "--k", "3", "--pattern", "1", "--gamma", "1.618033988749895", "--json")
    assert code == 0
    assert json.loads(out)["lambda"] == pytest.approx(1.527864, abs=1e-5)


def test_optimize_bad_pattern(capsys):
    with pytest.raises(SystemExit):
        main(["optimize", "--k", "3", "--pattern", "1,x"])
    with pytest.raises(SystemExit):
        main(["optimize", "--k", "3", "--pattern", "5"])


def test_search_exhaustive_stable(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "search", "--k", "3", "--n-max", "2", "--gamma-step", "1e-2",
                         "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["complete"] and doc["algorithm"]["k"] == 3


def test_search_local_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "search", "--k", "4", "--mode", "local", "--n", "3",
                         "--iterations", "15", "--seed", "42", "--gamma-step", "1e-2",
                         "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["seed"] == 42


def test_compare_simple(capsys):
    code, out, _ = run(capsys, "compare", "--alg", "simple", "--json")
    assert code == 0
    assert json.loads(out)["improvement"] <= 1e-6


def test_compare_linear_100(capsys):
    code, out, _ = run(capsys, "compare", "--alg", "linear:k=100", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["improvement"] >= 0
    assert doc["optimized_lambda"] <= doc["perf"]


def test_table1_small(capsys):
    code, out, _ = run(capsys, "table1", "--ks", "3", "--gamma-step", "1e-3", "--format", "csv")
    assert code == 0
    header, row = out.splitlines()
    cells = dict(zip(header.split(","), row.split(",")))
    assert cells["method"] == "exhaustive"
    assert abs(float(cells["lambda"]) - 1.529) <= 0.005


def test_table1_partial_budget(capsys):
    code, out, _ = run(capsys, "table1", "--ks", "5", "--budget", "0s", "--format", "json")
    assert code == 0
    assert json.loads(out)[0]["partial"] is True


def test_parsers():
    assert parse_budget("600s") == 600 and parse_budget("10m") == 600 and parse_budget("2") == 2
    assert parse_ks("3-5,8") == [3, 4, 5, 8]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "online_checkpointing", "bounds", "--k", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "trivial_lower" in proc.stdout
