import json
from pathlib import Path


from qlh.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    payload = json.loads(out.out) if out.out.strip().startswith("{") else None
    return code, payload, out.err


def test_ifun_p1(capsys, tmp_path):
    geo = tmp_path / "p1.json"
    geo.write_text(json.dumps({"schema_version": 1, "proj_space": 1}))
    code, payload, _ = run(capsys, "ifun", "--geometry", str(geo), "--truncate", "2")
    assert code == 0 and payload["status"] == "ok"
    assert payload["basis"] == ["1", "h"]


def test_pf_check_p2(capsys):
    code, payload, _ = run(capsys, "pf-check", "--geometry", str(DATA / "p2.json"), "--truncate", "3")
    assert code == 0
    assert all(r["annihilates"] for r in payload["operators"])


def test_quintic(capsys):
    code, payload, _ = run(capsys, "quintic", "--truncate", "2")
    assert code == 0
    assert payload["n_d"]["1"] == "2875"


def test_flop_check_is_deterministic(capsys):
    first = run(capsys, "flop-check", "--model", "flip", "--trials", "2", "--seed", "5")
    second = run(capsys, "flop-check", "--model", "flip", "--trials", "2", "--seed", "5")
    assert first == second and first[0] == 0


def test_factors(capsys):
    code, payload, _ = run(capsys, "blowup-factor", "--D", "0,0", "--E", "-1")
    assert payload["factor"] == "exp[s*(E/z-1)]*(E)/((D1-E+z)*(D2-E+z))"
    code, payload, _ = run(capsys, "det-factor", "--L", "0,0", "--h", "1", "--trivial-L")
    assert code == 0 and payload["is_one"]


def test_conifold(capsys):
    code, payload, _ = run(capsys, "conifold-check", "--data", str(DATA / "conifold_k2.json"))
    assert code == 0
    assert payload["yukawa_log_parts"]["u_111"] == "2*kappa/(r1)"
    code, payload, _ = run(capsys, "conifold-check", "--data", str(DATA / "conifold_bad.json"))
    assert code == 1 and payload["status"] == "fail"


def test_oracles(capsys):
    assert run(capsys, "oracle", "g25-lines")[1]["value"] == 2875
    assert run(capsys, "oracle", "kontsevich", "--dmax", "3")[1]["N"] == {"1": 1, "2": 1, "3": 12}


def test_config_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"proj_space": 1,\n oops}')
    code, _, err = run(capsys, "ifun", "--geometry", str(bad))
    assert code == 2 and ":2:" in err
    assert run(capsys, "ifun", "--geometry", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "ifun", "--geometry", str(DATA / "p2.json"), "--zwin", "3,1")[0] == 2
    assert run(capsys, "nosuch")[0] == 2


def test_out_file_and_table(capsys, tmp_path):
    out = tmp_path / "o.json"
    code = main(["oracle", "g25-lines", "--out", str(out), "--format", "table"])
    text = capsys.readouterr().out
    assert code == 0 and "2875" in text
    assert json.loads(out.read_text())["value"] == 2875
