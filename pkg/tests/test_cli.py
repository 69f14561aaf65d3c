import json
import subprocess
import sys
from pathlib import Path

import pytest

from morselevels.chaincore import complex_to_dict, simplicial_complex
from morselevels.cli import run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.startswith("{") else out)


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_torus_sweep_csv(capsys, tmp_path):
    code = run(["sweep", "--config", str(CONFIGS / "torus_height.json"), "--out", str(tmp_path), "--csv"])
    assert code == 0
    rows = [r.split(",") for r in (tmp_path / "sweep.csv").read_text().splitlines()]
    header, body = rows[0], rows[1:]
    b0 = [r[header.index("b0")] for r in body if r[1] == "Q"]
    assert b0 == ["1", "2", "1"]
    assert (tmp_path / "sweep_Q_b0.dat").exists()
    doc = json.loads((tmp_path / "sweep.json").read_text())
    assert doc["schema"] == 1 and doc["subcommand"] == "sweep"
    assert "timings" not in doc


def test_pendulum_top_verdict(capsys):
    code, doc = report(capsys, "verdict", "--config", str(CONFIGS / "pendulum_top.json"))
    assert code == 0
    (res,) = doc["result"]["verdicts"]
    v = res["verdict"]
    assert (v["outcome"], v["rule"], v["witness"]) == ("MUST_CHANGE", "thm:closed_manifold(1)", "Zk:2")
    assert "Z" in res["differing_coefficients"]
    assert res["observed_j1"]["Q"] in res["maxima_rule_j1"]


def test_rp2_example(capsys):
    code, doc = report(capsys, "example", "rp2-no-change", "--coeff", "Fp:2", "--coeff", "Z")
    assert code == 0
    r = doc["result"]
    assert r["equal_on_both_sides"]
    assert r["below"]["homology"]["Fp:2"] == {"0": {"betti": 1, "torsion": []}, "1": {"betti": 1, "torsion": []}}
    assert r["verdict"]["outcome"] == "MAY_NOT_CHANGE"


@pytest.mark.parametrize("name", ["handle-examples", "pendulum", "euler-trichotomy", "lens-vs-s2xs1"])
def test_examples_run(capsys, name):
    code, doc = report(capsys, "example", name)
    assert code == 0 and doc["result"]


def test_must_change_examples_carry_witness(capsys):
    for name, key in (("euler-trichotomy", "euler"), ("pendulum", "verdicts")):
        _, doc = report(capsys, "example", name, "--coeff", "Q", "--coeff", "Z", "--coeff", "Zk:2", "--coeff", "Zk:3")
        for row in doc["result"][key]:
            if row["verdict"]["outcome"] == "MUST_CHANGE":
                assert row["differing_coefficients"]


def test_lens_example(capsys):
    _, doc = report(capsys, "example", "lens-vs-s2xs1")
    assert doc["result"]["distinguished_by_Z"] and not doc["result"]["distinguished_by_F2_betti"]


def test_conformance_configs(capsys):
    for name in ("genus2_conformance.json", "sphere4_conformance.json", "torus_height.json"):
        code, doc = report(capsys, "conformance", "--config", str(CONFIGS / name))
        assert code == 0
        assert doc["result"]["conformance"]["conformant"]
        assert doc["result"]["subadditivity"]["violations"] == 0


def test_nbody_and_bundle_verdicts(capsys):
    _, doc = report(capsys, "verdict", "--config", str(CONFIGS / "nbody3.json"))
    assert doc["result"]["verdicts"][0]["verdict"]["outcome"] == "MUST_CHANGE"
    _, doc = report(capsys, "verdict", "--config", str(CONFIGS / "hopf.json"))
    assert doc["result"]["verdicts"][0]["verdict"]["witness"] == "Hopf"


def test_missing_file(capsys):
    assert run(["sweep", "--config", "/nonexistent/cfg.json"]) == 2
    assert "/nonexistent/cfg.json" in capsys.readouterr().err


def test_bad_inputs(capsys, tmp_path):
    assert run(["sweep", "--config", write(tmp_path, {"kind": "wormhole"})]) == 2
    assert run(["sweep", "--config", write(tmp_path, {"kind": "pl_field", "field": "torus_height"}), "--coeff", "Zk:1"]) == 2
    assert run(["verdict", "--config", write(tmp_path, {"kind": "bundle", "rank": 2})]) == 2
    assert run(["example", "no-such-example"]) == 2
    (tmp_path / "broken.json").write_text("{")
    assert run(["sweep", "--config", str(tmp_path / "broken.json")]) == 2


def test_invalid_complex_exit_3(capsys, tmp_path):
    doc = complex_to_dict(simplicial_complex([(0, 1, 2)]))
    doc["boundary"]["2:0"] = [["1:0", 1], ["1:1", 1], ["1:2", 1]]  # boundary of boundary no longer vanishes
    cx = tmp_path / "c.json"
    cx.write_text(json.dumps(doc))
    cfg = write(tmp_path, {"kind": "pl_field", "complex_file": str(cx), "values": {"0": 0, "1": 1, "2": 2}})
    assert run(["sweep", "--config", cfg]) == 3
    assert "invariant violation" in capsys.readouterr().err


def test_reports_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        assert run(["sweep", "--config", str(CONFIGS / "torus_height.json"), "--out", str(d), "--csv"]) == 0
        outs.append(((d / "sweep.json").read_bytes(), (d / "sweep.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "morselevels.cli", "example", "lens-vs-s2xs1"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["schema"] == 1
