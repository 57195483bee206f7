import csv
import json
import subprocess
import sys

import pytest

from conftest import CONFIGS
from relgain.cli import main
from relgain.config import config_hash, load_config
from relgain.verification import EnvelopeTable


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_verify_zero_fixture(tmp_path):
    out = tmp_path / "z"
    env = tmp_path / "env.txt"
    assert main(["verify", "--config", str(CONFIGS / "verify_zero.toml"), "--out", str(out),
                 "--envelopes", str(env)]) == 0
    rows = _rows(out / "verify_T11_a1.csv")
    assert len(rows) == 1
    assert float(rows[0]["ratio"]) == 0.0 and rows[0]["family_param"] == ""
    man = _manifest(out)
    assert man["exit_code"] == 0 and man["command"] == "verify"
    assert man["config_hash"] == config_hash(load_config(CONFIGS / "verify_zero.toml"))
    for key in ("tool_version", "wall_clock_s", "stage_timings_s", "tail_mass_flags"):
        assert key in man


def test_verify_sweep_freeze_and_breach(tmp_path):
    cfg = str(CONFIGS / "verify_small.toml")
    env = tmp_path / "env.txt"
    out = tmp_path / "a"
    assert main(["verify", "--config", cfg, "--out", str(out), "--envelopes", str(env),
                 "--freeze-envelope"]) == 0
    rows = _rows(out / "verify_T12_soft_a-1.csv")
    assert [float(r["family_param"]) for r in rows] == [0.5, 1.0]
    assert list(rows[0]) == ["family_param", "lhs", "rhs_f", "rhs_h", "ratio", "grid_N", "R",
                             "mode_cutoff", "tail_flag"]
    table = EnvelopeTable.load(env)
    assert table.get("juttner_T", "T11_a1").envelope == max(
        float(r["ratio"]) for r in _rows(out / "verify_T11_a1.csv"))
    # unchanged rerun stays inside the envelope
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "b"),
                 "--envelopes", str(env)]) == 0
    # tamper the envelope low
    for rec in table.records.values():
        rec.envelope *= 0.5
    table.save(env)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "c"),
                 "--envelopes", str(env)]) == 2
    assert _manifest(tmp_path / "c")["exit_code"] == 2


def test_verify_deterministic(tmp_path):
    bodies = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["verify", "--config", str(CONFIGS / "verify_small.toml"), "--out", str(out),
                     "--envelopes", str(tmp_path / "none.txt"), "--seed", "7"]) == 0
        bodies.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert bodies[0] == bodies[1] and len(bodies[0]) == 2


def test_invalid_config_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[[case]]\ntheorem = "T11"\na = 1.0\nm = 2\nn = 2\n[grid]\nN = 7\n')
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path)]) == 3
    err = capsys.readouterr().err
    assert "case.m,case.n" in err and "grid.N" in err
    assert main(["verify", "--out", str(tmp_path)]) == 3
    assert main(["verify", "--config", str(tmp_path / "missing.toml")]) == 3
    assert main(["kinematics-selftest", "--seed", "-1", "--out", str(tmp_path)]) == 3
    assert main(["kinematics-selftest", "--threads", "-2", "--out", str(tmp_path)]) == 3


def test_nonfinite_exit_4(tmp_path):
    cfg = tmp_path / "huge.toml"
    cfg.write_text('[grid]\nR = 4.0\nN = 8\n[kernel]\nname = "hard_ball"\namplitude = 1e300\n'
                   '[[case]]\ntheorem = "T11"\nm = 1\nn = 2\n')
    out = tmp_path / "o"
    assert main(["verify", "--config", str(cfg), "--out", str(out),
                 "--envelopes", str(tmp_path / "e.txt")]) == 4
    assert not list(out.glob("*.csv"))
    assert _manifest(out)["exit_code"] == 4


def test_conserve_rejects_zero(tmp_path):
    cfg = tmp_path / "z.toml"
    cfg.write_text('[[distributions]]\nkind = "zero"\n')
    assert main(["conserve", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_conserve_small(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[grid]\nR = 6.0\nN = 10\n[sphere]\nn_polar = 8\nn_azimuth = 16\n'
                   '[[distributions]]\nkind = "juttner"\n[probes]\ncount = 3\n'
                   '[outputs]\nformats = ["csv", "json"]\n')
    out = tmp_path / "o"
    assert main(["conserve", "--config", str(cfg), "--out", str(out)]) == 0
    rows = _rows(out / "conserve.csv")
    assert [r["moment_name"] for r in rows] == ["mass", "momentum_x", "momentum_y", "momentum_z",
                                                "energy", "entropy_production"]
    assert len(_rows(out / "probes.csv")) == 3
    assert (out / "conserve.json").exists()


def test_converge_table_and_cost_refusal(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["converge", "--config", str(CONFIGS / "converge_gaussian.toml"),
                 "--out", str(out)]) == 0
    rows = _rows(out / "converge.csv")
    assert len(rows) == 2 and float(rows[1]["observed_order"]) >= 1.9
    assert main(["converge", "--config", str(CONFIGS / "converge_gradient.toml"),
                 "--out", str(out)]) == 0
    rows = _rows(out / "converge.csv")
    assert 1.7 < float(rows[2]["observed_order"]) < 2.3
    assert main(["converge", "--config", str(CONFIGS / "converge_gaussian.toml"), "--levels", "4",
                 "--max-cost", "1000", "--out", str(tmp_path / "r")]) == 3
    assert "estimated cost" in capsys.readouterr().err
    assert main(["converge", "--config", str(CONFIGS / "converge_gaussian.toml"), "--levels", "5",
                 "--out", str(tmp_path / "r")]) == 3


def test_selftest_small(tmp_path):
    out = tmp_path / "s"
    assert main(["kinematics-selftest", "--scale", "0.01", "--out", str(out), "--seed", "3"]) == 0
    rows = _rows(out / "selftest.csv")
    assert all(int(r["violations"]) == 0 for r in rows)
    assert _manifest(out)["seed"] == 3


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("RELGAIN_THREADS", "1")
    out = tmp_path / "s"
    assert main(["kinematics-selftest", "--scale", "0.001", "--out", str(out)]) == 0
    assert _manifest(out)["threads"] == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "relgain", "converge", "--config",
                           str(CONFIGS / "converge_gaussian.toml"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "converge: exit 0" in proc.stdout
