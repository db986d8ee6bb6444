import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from slct.cli import run

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_linear_json(capsys):
    code, out, err = call(capsys, "linear", "--widths", "1,1,1", "--rank", "0", "--json")
    doc = json.loads(out)
    assert code == 0 and err == ""
    assert doc["lambda"] == {"num": 1, "den": 2} and doc["theta"] == 2
    assert doc["tool"] == "slct" and doc["version"]
    assert doc["decomposition"] == {"selected": [1, 2, 3], "ell": 2, "M": 2, "a": 1}


def test_linear_human_shortcut(capsys):
    code, out, _ = call(capsys, "linear", "--widths", "2,1,2", "--rank", "1")
    assert code == 0
    assert out.strip() == "lambda = 3/2 (1.5), theta = 1 [zero-margin shortcut]"


def test_linear_from_truth(capsys, tmp_path):
    code, out, _ = call(capsys, "linear", "--truth", SAMPLES / "onehidden.json", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["rank"] == 1 and doc["lambda"] == {"num": 2, "den": 1} and doc["theta"] == 2
    code, out, _ = call(capsys, "linear", "--truth", SAMPLES / "onehidden.json", "--bias", "--json")
    assert json.loads(out)["lambda"] == {"num": 3, "den": 1}


@pytest.mark.parametrize("argv, code", [
    (["linear", "--widths", "1,a", "--rank", "0"], 1),
    (["linear", "--widths", "1,1"], 1),
    (["frobnicate"], 1),
    ([], 1),
    (["linear", "--widths", "2,2", "--rank", "3"], 2),
    (["linear", "--widths", "2,0", "--rank", "0"], 2),
    (["relu", "--truth", "/nonexistent.json", "--domain", "/nonexistent.json"], 2),
])
def test_error_codes(capsys, argv, code):
    got, out, err = call(capsys, *argv)
    assert got == code
    assert err.count("\n") == 1 and err.strip()


def test_relu_example(capsys):
    code, out, _ = call(capsys, "relu", "--truth", SAMPLES / "relu_example.json",
                        "--domain", SAMPLES / "box03.json", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["removed"] == [1] and doc["regions"] == [[], [0]]
    assert doc["lambda"] == {"num": 3, "den": 2} and doc["groups"] == [[0]]


def test_relu_overrides(capsys, tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps({"groups": [[0, 1]]}))
    code, out, _ = call(capsys, "relu", "--truth", SAMPLES / "relu_disjoint.json",
                        "--domain", SAMPLES / "box11.json", "--groups", g, "--json")
    assert code == 0 and json.loads(out)["groups"] == [[0, 1]]
    g.write_text(json.dumps({"groups": [[0]]}))
    code, _, err = call(capsys, "relu", "--truth", SAMPLES / "relu_disjoint.json",
                        "--domain", SAMPLES / "box11.json", "--groups", g)
    assert code == 2 and "partition" in err


def test_softmax(capsys):
    code, out, _ = call(capsys, "softmax", "--truth", SAMPLES / "softmax21.json", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["lambda"] == {"num": 1, "den": 2} and doc["theta"] == 1
    assert doc["reducedWidths"] == [1, 1]


def test_select(capsys, tmp_path):
    code, out, _ = call(capsys, "select", "--candidates", SAMPLES / "candidates.json", "--n", "1000", "--json")
    ranking = json.loads(out)["ranking"]
    assert code == 0 and ranking[0]["widths"] == [1, 1, 1]
    assert set(ranking[0]) == {"widths", "bias", "rank", "lambda", "theta", "penalty"}
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"candidates": [{"widths": [2, 2], "rank": 9}, {"widths": [1, 1], "rank": 0}]}))
    code, out, err = call(capsys, "select", "--candidates", bad, "--n", "100", "--json")
    assert code == 2 and len(json.loads(out)["ranking"]) == 2 and err.count("\n") == 1


@pytest.mark.slow
def test_verify_linear(capsys, tmp_path):
    csv = tmp_path / "d.csv"
    code, out, err = call(capsys, "verify", "--truth", SAMPLES / "onehidden.json", "--kind", "linear",
                          "--method", "volume", "--samples", "1000000", "--seed", "42", "--csv", csv, "--json")
    doc = json.loads(out)
    assert code == 0, err
    assert doc["withinTwoSigma"] and doc["exact"]["lambda"] == {"num": 2, "den": 1}
    lines = csv.read_text().splitlines()
    assert lines[0] == "eps_or_n,hits,logV_or_logZ" and len(lines) >= 5


def test_verify_insufficient_hits(capsys):
    # a fixed grid far below any sampled value
    code, _, err = call(capsys, "verify", "--truth", SAMPLES / "onehidden.json", "--kind", "linear",
                        "--samples", "100000", "--eps-min", "1e-30", "--eps-max", "1e-20")
    assert code == 3 and err.startswith("numerical error: insufficient hits")


def test_verify_rejects_small_samples(capsys):
    code, _, err = call(capsys, "verify", "--truth", SAMPLES / "onehidden.json", "--kind", "linear",
                        "--samples", "1000")
    assert code == 2


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "slct.cli", "linear", "--widths", "2,2,2", "--rank", "1"],
                         capture_output=True, text=True, env={**os.environ})
    assert res.returncode == 0 and res.stdout.startswith("lambda = 2 (2), theta = 2")
