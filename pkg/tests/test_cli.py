import json

import pytest

from zdclock.artifacts import SchemaError, csv_bytes, read_csv, read_manifest, write_csv
from zdclock.cli import UsageError, grid_values, main, parse_config


def ini(tmp_path, text):
    p = tmp_path / "run.ini"
    p.write_text(text)
    return p


def test_defaults_file_and_flags(tmp_path):
    p = ini(tmp_path, "[run]\nd = 3\nL = 16, 32\nT = 1.0\n[grid]\nstart = 0.5\nstop = 0.7\nstep = 0.1\n")
    cfg = parse_config(p)
    assert cfg["d"] == 3 and cfg["L"] == [16, 32] and cfg["T"] == 1.0 and cfg["sweeps"] == 10_000
    assert grid_values(cfg) == [0.5, 0.6, 0.7]
    assert parse_config(p, {"T": "2.0", "d": None})["T"] == 2.0


def test_empty_file_requires_d_and_L(tmp_path):
    with pytest.raises(UsageError, match="'d'"):
        parse_config(ini(tmp_path, ""))
    with pytest.raises(UsageError, match="'L'"):
        parse_config(ini(tmp_path, "[run]\nd = 2\n"))


@pytest.mark.parametrize("text,key", [("[run]\nd = 2\nL = 4\nfoo = 1\n", "foo"),
                                      ("[run]\nd = 2\nL = 4\nT = hot\n", "T"),
                                      ("[run]\nd = two\nL = 4\n", "d"),
                                      ("[run]\nd = 2\nL = 4\nproposal = wolff\n", "proposal"),
                                      ("[caps]\nmemory = lots\n", "caps.memory")])
def test_errors_name_the_key(tmp_path, text, key):
    with pytest.raises(UsageError, match=repr(key).replace(".", r"\.")):
        parse_config(ini(tmp_path, text))


def test_unknown_section_and_missing_file(tmp_path):
    with pytest.raises(UsageError, match="section"):
        parse_config(ini(tmp_path, "[model]\nd = 2\n"))
    with pytest.raises(UsageError):
        parse_config(tmp_path / "absent.ini")
    with pytest.raises(UsageError, match="grid"):
        grid_values(parse_config(flags={"d": 2, "L": "4", "grid.start": 0.1}))


def test_csv_schema_round_trip_and_rejection(tmp_path):
    p = write_csv(tmp_path / "a.csv", "exact_thermo", [{"T": 1.0, "logZ": 0.1, "E": -1 / 3, "C_v": 2.0}])
    name, rows = read_csv(p)
    assert name == "exact_thermo" and rows[0]["E"] == -1 / 3
    bad = tmp_path / "b.csv"
    bad.write_bytes(csv_bytes("correlation", []).replace(b"correlation 1", b"correlation 9"))
    with pytest.raises(SchemaError, match="version 9"):
        read_csv(bad)
    bad.write_text("T,r\n1,2\n")
    with pytest.raises(SchemaError):
        read_csv(bad)
    with pytest.raises(SchemaError):
        csv_bytes("mc_series", [(1, 2)])


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_exit_codes(tmp_path, capsys):
    rc, _, err = run(capsys, "mc", "--d", "3", "--out", str(tmp_path))
    assert rc == 2 and "'L'" in err
    rc, _, err = run(capsys, "exact", "--d", "6", "--L", "64", "--T", "0.8", "--out", str(tmp_path))
    assert rc == 3 and "6**4096" in err
    rc, _, err = run(capsys, "string-scan", "--d", "3", "--L", "2", "--beta", "0.7", "--caps-memory", "1000",
                     "--sweeps", "200", "--therm", "10", "--out", str(tmp_path))
    assert rc == 0 and json.loads((tmp_path / "string_scan.json").read_text())["method"] == "monte-carlo"
    rc, _, err = run(capsys, "replay")
    assert rc == 2


def test_verify_exit_status_follows_curvature_step(tmp_path, capsys):
    rc, out, _ = run(capsys, "verify", "--d", "3", "--L", "2", "--delta-beta", "0.001", "--out", str(tmp_path))
    assert rc == 0
    rows = json.loads((tmp_path / "verify.json").read_text())
    assert all(r["passed"] for r in rows if r["mandatory"])
    control = [r for r in rows if not r["mandatory"]]
    assert control and all(not r["passed"] for r in control)
    # at the default step the curvature extrapolation misses 1e-6 by truncation error
    rc, _, _ = run(capsys, "verify", "--d", "3", "--L", "2", "--out", str(tmp_path / "default"))
    rows = json.loads((tmp_path / "default" / "verify.json").read_text())
    failed = {r["identity"] for r in rows if r["mandatory"] and not r["passed"]}
    assert rc == 1 and failed == {"curvature"}


def test_mc_manifest_and_replay(tmp_path, capsys):
    rc, out, _ = run(capsys, "mc", "--d", "6", "--L", "8", "--T", "0.8", "--sweeps", "500",
                     "--therm", "50", "--seed", "7", "--out", str(tmp_path))
    assert rc == 0
    man = read_manifest(tmp_path / "mc.manifest.json")
    assert man["outputs"] == ["mc.json", "mc_series.csv"]
    for key in ("seed", "rng", "sweeps", "therm", "proposal", "code_version", "autocorr_estimate"):
        assert key in man["run"]
    name, rows = read_csv(tmp_path / "mc_series.csv")
    assert name == "mc_series" and len(rows) == 500
    rc, out, _ = run(capsys, "replay", str(tmp_path / "mc.manifest.json"))
    assert rc == 0 and json.loads(out)["match"]


def test_replay_detects_tampering(tmp_path, capsys):
    run(capsys, "exact", "--d", "2", "--L", "3", "--grid-start", "1", "--grid-stop", "2",
        "--grid-step", "0.5", "--out", str(tmp_path))
    man = tmp_path / "exact.manifest.json"
    data = json.loads(man.read_text())
    data["config"]["grid.stop"] = 2.5
    man.write_text(json.dumps(data))
    rc, out, _ = run(capsys, "replay", str(man))
    assert rc == 1 and not json.loads(out)["match"]


def test_fidelity_scan_and_classify_commands(tmp_path, capsys):
    rc, _, _ = run(capsys, "fidelity-scan", "--d", "2", "--L", "4", "--grid-start", "0.2", "--grid-stop",
                   "0.6", "--grid-step", "0.1", "--sweeps", "3000", "--therm", "300", "--out", str(tmp_path))
    assert rc == 0
    name, rows = read_csv(tmp_path / "fidelity_curve.csv")
    assert name == "fidelity_curve" and len(rows) == 5
    summary = json.loads((tmp_path / "fidelity_scan.json").read_text())
    assert summary["peak_chi_F"] is not None
    rc, _, _ = run(capsys, "classify", "--d", "2", "--L", "8", "--grid-start", "1.2", "--grid-stop", "3.6",
                   "--grid-step", "2.4", "--sweeps", "4000", "--therm", "400", "--out", str(tmp_path))
    assert rc == 0
    report = json.loads((tmp_path / "classify.json").read_text())
    assert report["labels"] == {"1.2": "long-range", "3.6": "exponential"}
    assert read_csv(tmp_path / "correlation_L8.csv")[0] == "correlation"


def test_explicit_grid_values(tmp_path):
    cfg = parse_config(ini(tmp_path, "[run]\nd = 6\nL = 16\n[grid]\nvalues = 1.3, 0.4, 0.78\n"))
    assert grid_values(cfg) == [0.4, 0.78, 1.3]
    cfg = parse_config(flags={"d": 2, "L": "4", "grid.values": "1,2", "grid.step": 0.5})
    with pytest.raises(UsageError, match="grid.values"):
        grid_values(cfg)
    with pytest.raises(UsageError, match="grid.values"):
        parse_config(flags={"d": 2, "L": "4", "grid.values": "1,x"})
