import csv
import json
import subprocess
import sys

import pytest

from curflow.cli import main


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "-o", str(out)])
    return code, out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_gen_writes_spec_and_truncation(tmp_path):
    code, out = _run(tmp_path, "ray.json", "gen", "ray", "--rmax", "6")
    assert code == 0
    obj = json.loads(out.read_text())
    assert obj["generator"]["family"] == "ray"
    assert obj["rmax"] == 6.0
    assert obj["current"]["edges"]


def test_decompose_ray(tmp_path):
    _, spec = _run(tmp_path, "ray.json", "gen", "ray")
    code, out = _run(tmp_path, "d.json", "decompose", str(spec), "--rmax", "8")
    assert code == 0
    obj = json.loads(out.read_text())
    assert obj["cycles"] == [] and obj["paths"] == []
    assert [r["kind"] for r in obj["rays"]] == ["bounded-left"]
    assert obj["report"]["pass"]
    assert "profile_data" in obj


def test_decompose_intrinsic_comb_is_rejected(tmp_path, capsys):
    _, spec = _run(tmp_path, "comb.json", "gen", "comb", "--teeth", "3", "--mode", "intrinsic")
    code, _ = _run(tmp_path, "d.json", "decompose", str(spec), "--rmax", "8")
    assert code == 3
    assert "single point at infinity" in capsys.readouterr().err


def test_decompose_embedded_comb(tmp_path):
    _, spec = _run(tmp_path, "comb.json", "gen", "comb", "--teeth", "3", "--mode", "embed")
    code, out = _run(tmp_path, "d.json", "decompose", str(spec), "--rmax", "8")
    assert code == 0
    assert json.loads(out.read_text())["report"]["boundary_bound"]["pass"]


@pytest.mark.parametrize("strategy", ["dfs", "greedy-xi"])
def test_decompose_and_verify_finite(tmp_path, strategy):
    _, cur = _run(tmp_path, "c.json", "gen", "random-flow", "--seed", "3", "--param", "max_edges=12", "--rmax", "5")
    code, dec = _run(tmp_path, "d.json", "decompose", str(cur), "--strategy", strategy)
    assert code == 0
    code, rep = _run(tmp_path, "r.json", "verify", str(cur), str(dec))
    assert code == 0
    assert json.loads(rep.read_text())["pass"]


def test_exact_mode_writes_exact_weights(tmp_path, monkeypatch):
    _, spec = _run(tmp_path, "g.json", "gen", "grid-flow", "--seed", "2")
    monkeypatch.setenv("CURFLOW_EXACT", "1")
    code, dec = _run(tmp_path, "d.json", "decompose", str(spec), "--rmax", "5")
    assert code == 0
    obj = json.loads(dec.read_text())
    weights = [e["w"] for part in ("cycles", "paths", "rays") for e in obj[part]]
    assert weights and all(isinstance(w, (int, str)) for w in weights)  # integers or "p/q"
    assert obj["report"]["reconstruction"]["pass"]
    assert main(["verify", str(spec), str(dec), "-o", str(tmp_path / "r.json")]) == 0


def test_verify_detects_tampering(tmp_path, capsys):
    _, cur = _run(tmp_path, "c.json", "gen", "random-flow", "--seed", "5", "--rmax", "5")
    _, dec = _run(tmp_path, "d.json", "decompose", str(cur))
    obj = json.loads(dec.read_text())
    part = next(p for p in ("cycles", "paths", "rays") if obj[p])
    obj[part][0]["w"] = obj[part][0]["w"] * 2
    dec.write_text(json.dumps(obj))
    code, _ = _run(tmp_path, "r.json", "verify", str(cur), str(dec))
    assert code == 2
    assert "identity failed" in capsys.readouterr().err


def test_comb_study_csv(tmp_path):
    code, out = _run(tmp_path, "comb.csv", "comb-study", "--teeth-range", "1:3", "--rmax", "8")
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["teeth", "mode", "r_max", "boundary_mass_delta"]
    intrinsic = [float(r[3]) for r in rows[1:] if r[1] == "intrinsic"]
    embed = [float(r[3]) for r in rows[1:] if r[1] == "embed"]
    assert intrinsic == [2.0, 4.0, 6.0]
    assert all(v <= 2.0 ** (-8 + 2) for v in embed)


@pytest.mark.parametrize("what,header", [
    ("mass-profile", ["r", "mass"]),
    ("g-profile", ["r", "phi_tilde", "g", "G"]),
    ("boundary-ledger", ["point", "starts", "ends"]),
])
def test_plot_data(tmp_path, what, header):
    _, spec = _run(tmp_path, "line.json", "gen", "line")
    _, dec = _run(tmp_path, "d.json", "decompose", str(spec), "--rmax", "6")
    code, out = _run(tmp_path, "p.csv", "plot-data", str(dec), "--what", what)
    assert code == 0
    rows = _rows(out)
    assert rows[0] == header and len(rows) > 1


def test_g_profile_needs_profile(tmp_path):
    _, gen = _run(tmp_path, "g.json", "gen", "random-flow", "--rmax", "5")
    cur = tmp_path / "c.json"
    cur.write_text(json.dumps(json.loads(gen.read_text())["current"]))
    _, dec = _run(tmp_path, "d.json", "decompose", str(cur))
    code, _ = _run(tmp_path, "p.csv", "plot-data", str(dec), "--what", "g-profile")
    assert code == 3


def test_output_is_deterministic(tmp_path):
    _, spec = _run(tmp_path, "g.json", "gen", "grid-flow", "--seed", "4")
    _, a = _run(tmp_path, "a.json", "decompose", str(spec), "--rmax", "6")
    _, b = _run(tmp_path, "b.json", "decompose", str(spec), "--rmax", "6")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [
    ["gen", "spiral"],
    ["gen", "ray", "--param", "nonsense"],
    ["comb-study", "--teeth-range", "a:b"],
])
def test_bad_input_exit_code(tmp_path, argv):
    assert main([*argv, "-o", str(tmp_path / "x")]) == 3


def test_malformed_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"neither": 1}')
    assert main(["decompose", str(bad), "-o", str(tmp_path / "d.json")]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "curflow.cli", "gen", "ray", "--rmax", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["generator"]["family"] == "ray"
