import json
import subprocess
import sys

import pytest

from imbalance_wom.cli import run
from imbalance_wom.constructions import build_construction1
from imbalance_wom.core import code_to_dict, load_code
from imbalance_wom.verifier import all_frontiers, guaranteed_writes


def _run(capsys, *argv):
    rc = run(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_table1_csv(capsys):
    rc, out, _ = _run(capsys, "tables", "--which", "1")
    assert rc == 0
    assert out.strip().splitlines() == [
        "q,upper_bound_unconstrained,t_construction1_d3,t_diagonal_d2",
        "8,4,4,3",
        "16,9,9,7",
        "20,12,11,9",
        "32,20,18,15",
    ]


def test_table2_csv(capsys):
    rc, out, _ = _run(capsys, "tables", "--which", "2")
    lines = out.strip().splitlines()
    assert rc == 0 and lines[0] == "M,q,attained" and len(lines) == 11
    assert all(line.endswith("true") for line in lines[1:])


def test_table3_csv_and_sidecar(capsys, tmp_path):
    side = tmp_path / "t3.json"
    rc, out, _ = _run(capsys, "tables", "--which", "3", "--sidecar", str(side))
    lines = out.strip().splitlines()
    assert rc == 0 and lines[0] == "q,d,sum_rate,note"
    assert lines[1] == "8,-,3.97,"
    assert lines[-1].startswith("16,3,5.23,")
    rows = json.loads(side.read_text())
    assert rows[-1]["sum_rate_exact"] == pytest.approx(5.2288, abs=1e-4)


def test_construct_then_verify(capsys, tmp_path):
    path = tmp_path / "c.json"
    rc, _, _ = _run(capsys, "construct", "--family", "construction1", "--a", "3", "--q", "6", "--out", str(path))
    assert rc == 0
    rc, out, _ = _run(capsys, "verify", "--code", str(path), "--frontiers", "--format", "json")
    assert rc == 0
    report = json.loads(out)
    assert (report["t"], report["d"], report["violation"]) == (3, 3, None)
    assert report["frontiers"] == [[[1, 2], [2, 1]], [[2, 4], [3, 3], [4, 2]], [[5, 5]]]


def test_round_trip_matches_in_memory(tmp_path, capsys):
    code = build_construction1(4, 17)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(code_to_dict(code)))
    loaded = load_code(path)
    assert guaranteed_writes(loaded) == guaranteed_writes(code)
    assert all_frontiers(loaded) == all_frontiers(code)


def test_verify_reports_violation(capsys, tmp_path):
    doc = {"n": 2, "q": 6, "m": [2], "d": 3, "t": 1, "family": "construction1",
           "decode": [{"state": [0, 0], "value": 0, "write": 1}, {"state": [4, 0], "value": 1, "write": 1}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rc, out, _ = _run(capsys, "verify", "--code", str(path))
    assert rc == 2
    assert "violation" in out


def test_oracle(capsys):
    rc, out, _ = _run(capsys, "oracle", "--q", "16", "--m", "8", "--d", "3")
    assert rc == 0 and out.strip() == "9"


def test_lattice_discretize(capsys, tmp_path):
    path = tmp_path / "l.json"
    rc, out, _ = _run(capsys, "lattice", "--q", "8", "--d", "3", "--discretize", "--out", str(path), "--format", "json")
    assert rc == 0
    report = json.loads(out)
    assert (report["M1"], report["M2"], report["t"]) == (18, 21, 2)
    doc = json.loads(path.read_text())
    assert doc["family"] == "lattice2write" and doc["m"] == [18, 21] and doc["t"] == 2


def test_lattice_csv(capsys):
    rc, out, _ = _run(capsys, "lattice", "--q", "8", "--unconstrained", "--format", "csv")
    assert rc == 0
    assert out.strip().splitlines() == ["q,d,Z1,Z2,sum_rate", "8,-,17.53,13.95,3.97"]


def test_lattice_requires_mode(capsys):
    rc, _, err = _run(capsys, "lattice", "--q", "8")
    assert rc == 1 and "--unconstrained" in err


def test_wordline_trace(capsys, tmp_path):
    code = tmp_path / "c.json"
    _run(capsys, "construct", "--family", "construction1", "--a", "3", "--q", "6", "--out", str(code))
    msgs = tmp_path / "m.json"
    msgs.write_text("[[1, 5], [1, 2]]")
    trace = tmp_path / "trace.jsonl"
    rc, _, _ = _run(capsys, "wordline", "--code", str(code), "--pairs", "2", "--messages", str(msgs), "--trace", str(trace))
    assert rc == 0
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert records[-1] == {"i": 2, "levels": [3, 2, 4, 2], "balanced": True, "frontier_ok": True}


def test_wordline_random_is_seeded(capsys, tmp_path):
    code = tmp_path / "c.json"
    _run(capsys, "construct", "--family", "construction1", "--a", "3", "--q", "11", "--out", str(code))
    outs = [_run(capsys, "wordline", "--code", str(code), "--pairs", "4", "--seed", "9")[1] for _ in range(2)]
    assert outs[0] == outs[1] and len(outs[0].strip().splitlines()) == 6


def test_ber(capsys):
    rc, out, _ = _run(capsys, "ber", "--q", "8", "--ber0", "2e-5", "--ber-ici", "5e-3", "--d", "3", "--format", "json")
    assert rc == 0
    row = json.loads(out)
    assert row["margin"] == pytest.approx(4.235, abs=1e-3)
    assert row["improvement_direct"] == pytest.approx(18.3, abs=0.3)


def test_ber_with_mc(capsys):
    rc, out, _ = _run(capsys, "ber", "--q", "8", "--ber0", "2e-5", "--ber-ici", "5e-3", "--d", "3",
                      "--mc", "400000", "--seed", "1", "--format", "json")
    row = json.loads(out)
    assert rc == 0 and row["improvement_mc"] > 1


def test_usage_errors(capsys):
    assert _run(capsys, "oracle", "--q", "16", "--m", "8")[0] == 1
    assert _run(capsys, "oracle", "--q", "16", "--m", "8", "--d", "3", "--bogus")[0] == 1
    assert _run(capsys)[0] == 1
    assert _run(capsys, "construct", "--family", "construction1", "--a", "3", "--q", "3")[0] == 1
    assert _run(capsys, "verify", "--code", "/nonexistent.json")[0] == 1


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q": 16, "m": 8, "d": 3}))
    assert _run(capsys, "oracle", "--config", str(cfg))[1].strip() == "9"
    # command-line flags override the file
    assert _run(capsys, "oracle", "--config", str(cfg), "--q", "8")[1].strip() == "4"
    cfg.write_text(json.dumps({"q": 16, "zz": 1}))
    assert _run(capsys, "oracle", "--config", str(cfg))[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "imbalance_wom", "oracle", "--q", "8", "--m", "8", "--d", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.strip() == "4"
