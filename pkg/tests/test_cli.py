import csv
import json

import jsonschema
import pytest

from qnr import __version__
from qnr.cli import main
from qnr.primes import load_cache

ENVELOPE = {
    "type": "object",
    "required": ["command", "params", "result", "version"],
    "properties": {
        "command": {"type": "string"},
        "params": {"type": "object"},
        "result": {"type": "object"},
        "version": {"const": __version__},
    },
    "additionalProperties": False,
}
SERIES_RESULT = {
    "type": "object",
    "required": ["value", "tail_bound", "terms_used"],
    "properties": {
        "value": {"type": "number"},
        "tail_bound": {"type": "number", "minimum": 0},
        "terms_used": {"type": "integer", "minimum": 1},
    },
}
SCAN_RESULT = {
    "type": "object",
    "required": ["primes_scanned", "sum_nk", "sum_m", "gap_counts", "pattern_counts", "max_m"],
    "properties": {
        "primes_scanned": {"type": "integer"},
        "sum_nk": {"type": "array", "items": {"type": "integer"}},
        "sum_m": {"type": "integer"},
        "gap_counts": {
            "type": "object",
            "patternProperties": {r"^\d+/\d+$": {"type": "integer"}},
            "additionalProperties": False,
        },
        "pattern_counts": {
            "type": "object",
            "patternProperties": {r"^[+-]+$": {"type": "integer"}},
            "additionalProperties": False,
        },
        "max_m": {"type": "object", "required": ["p", "m"]},
    },
    "additionalProperties": False,
}
LARGEM_RESULT = {
    "type": "object",
    "required": ["y", "q", "m_index", "n_index", "prime", "m_value", "guarantee"],
    "properties": {
        key: {"type": ["integer", "null"]}
        for key in ("y", "q", "m_index", "n_index", "prime", "m_value", "guarantee")
    },
    "additionalProperties": False,
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    env = json.loads(out)
    jsonschema.validate(env, ENVELOPE)
    return env


def test_nkp(capsys):
    assert run_json(capsys, "nkp", "--p", "7", "--k", "2")["result"]["values"] == [3, 5]
    assert run_json(capsys, "nkp", "--p", "3", "--k", "1")["result"]["values"] == [2]
    code, _, err = run(capsys, "nkp", "--p", "4", "--k", "1")
    assert code == 2 and "odd prime" in err


def test_series_mu(capsys):
    env = run_json(capsys, "series", "mu", "--k", "1", "--eps", "1e-6")
    jsonschema.validate(env["result"], SERIES_RESULT)
    assert str(env["result"]["value"]).startswith("3.674")
    assert env["result"]["tail_bound"] <= 1e-6


def test_series_gap_and_mavg(capsys):
    env = run_json(capsys, "series", "gap", "--z", "3/2", "--eps", "1e-6")
    assert str(env["result"]["complement"]).startswith("0.350")
    assert env["params"]["z"] == "3/2"
    env = run_json(capsys, "series", "gap", "--z", "3/2", "--terms", "13")
    assert env["result"]["terms_used"] == 13
    env = run_json(capsys, "series", "mavg", "--eps", "5e-4")
    assert str(env["result"]["value"]).startswith("2.504")


def test_series_others(capsys):
    assert run_json(capsys, "series", "binom-identity", "--k", "5", "--n", "200")["result"]["value"] == pytest.approx(2, abs=1e-12)
    assert run_json(capsys, "series", "binom-tail", "--k", "1")["result"]["value"] == pytest.approx(3.375)
    ratio = run_json(capsys, "series", "ratio", "--k", "1")["result"]["value"]
    assert ratio == pytest.approx(1.22488132179, rel=1e-10)


def test_twelve_significant_digits(capsys):
    value = run_json(capsys, "series", "mu", "--k", "1")["result"]["value"]
    assert len(repr(value).replace(".", "").lstrip("0")) <= 12


@pytest.mark.parametrize(
    "argv",
    [
        ("series", "gap", "--z", "1.5"),
        ("series", "gap", "--z", "three"),
        ("series", "gap", "--z", "1/1"),
        ("series", "mu", "--k", "1", "--eps", "0"),
        ("series", "mu", "--k", "1", "--eps", "-1"),
        ("series", "mu"),
        ("series", "gap"),
        ("scan", "--x", "2"),
        ("scan", "--x", "1.5e0"),
        ("pattern", "--eps", "+x"),
        ("largem", "--y", "3"),
    ],
)
def test_bad_input_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc_info:
        raise SystemExit(main(list(argv)))
    assert exc_info.value.code == 2


def test_pattern(capsys):
    env = run_json(capsys, "pattern", "--eps", "-", "--limit", "100")
    assert env["result"] == {
        "n": 1, "q": 8, "class_count": 2, "phi_q_over_2n": 2, "classes": [3, 5], "prime": 3
    }
    env = run_json(capsys, "pattern", "--eps", "+-+-", "--limit", "1e5")
    assert env["result"]["class_count"] == env["result"]["phi_q_over_2n"] == 12


def test_pattern_overflow_exit_4(capsys):
    code, _, err = run(capsys, "pattern", "--eps", "+" * 18)
    assert code == 4 and "15" in err


def test_largem(capsys):
    env = run_json(capsys, "largem", "--y", "20", "--limit", "1e8")
    jsonschema.validate(env["result"], LARGEM_RESULT)
    assert env["result"]["guarantee"] == 7
    assert env["result"]["m_value"] >= 7


def test_scan_files(capsys, tmp_path):
    out = tmp_path / "run"
    code, stdout, err = run(capsys, "scan", "--x", "1000", "--kmax", "2", "--z", "3/2", "--z", "2",
                            "--pattern-n", "2", "--out", str(out))
    assert code == 0, err
    env = json.loads((out / "scan.json").read_text())
    jsonschema.validate(env, ENVELOPE)
    jsonschema.validate(env["result"], SCAN_RESULT)
    assert env["result"]["primes_scanned"] == 167
    assert set(env["result"]["gap_counts"]) == {"3/2", "2/1"}
    with open(out / "convergence.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["x", "stat_name", "empirical", "theoretical", "abs_err"]
    assert {r["x"] for r in rows} == {"100", "1000"}
    assert "mean_n1" in stdout and "gap_gt_3/2" in stdout
    assert not list(out.glob("*.*.*"))  # no temp files left behind


def test_scan_small(capsys, tmp_path):
    run(capsys, "scan", "--x", "10", "--kmax", "1", "--out", str(tmp_path))
    env = json.loads((tmp_path / "scan.json").read_text())
    assert env["result"]["sum_nk"] == [7]


def test_scan_theory_matches_series_command(capsys, tmp_path):
    run(capsys, "scan", "--x", "1e4", "--kmax", "1", "--z", "2", "--eps", "1e-8", "--out", str(tmp_path))
    with open(tmp_path / "convergence.csv", newline="") as fh:
        theory = {r["stat_name"]: float(r["theoretical"]) for r in csv.DictReader(fh)}
    mu = run_json(capsys, "series", "mu", "--k", "1", "--eps", "1e-8")["result"]["value"]
    mavg = run_json(capsys, "series", "mavg", "--eps", "1e-8")["result"]["value"]
    gap = run_json(capsys, "series", "gap", "--z", "2", "--eps", "1e-8")["result"]["value"]
    assert theory == {"mean_n1": mu, "mean_M": mavg, "gap_gt_2/1": gap}


def test_scan_unwritable_exit_3(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, _ = run(capsys, "scan", "--x", "100", "--out", str(blocker / "sub"))
    assert code == 3


def test_prime_cache_env(capsys, tmp_path, monkeypatch):
    cache = tmp_path / "primes.bin"
    monkeypatch.setenv("QNR_PRIME_CACHE", str(cache))
    run_json(capsys, "nkp", "--p", "11", "--k", "3")
    table = load_cache(cache)
    assert table.limit >= 10**5
    assert run_json(capsys, "nkp", "--p", "11", "--k", "3")["result"]["values"] == [2, 7, 13]
    cache.write_bytes(b"garbage")
    assert run_json(capsys, "nkp", "--p", "7", "--k", "2")["result"]["values"] == [3, 5]
