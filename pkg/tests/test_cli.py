import subprocess
import sys

import numpy as np
import pytest

from imucal.cli import run_cli
from imucal.model import load_params
from imucal.stream import read_stream


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run_cli(["simulate", "--n", "12", "--seed", "1", "--out", str(d / "s.csv"), "--truth-out", str(d / "truth.txt")]) == 0
    return d


def test_simulate_then_calibrate(workdir, capsys):
    assert run_cli(["calibrate", str(workdir / "s.csv"), "--out", str(workdir / "est.json")]) == 0
    out = capsys.readouterr().out
    assert "segments_used 12" in out
    assert "converged accel=yes gyro=yes" in out
    est, truth = load_params(workdir / "est.json"), load_params(workdir / "truth.txt")
    np.testing.assert_allclose(est.accel.scale, truth.accel.scale, atol=1e-3)


def test_apply_levels_gravity(workdir, capsys):
    run_cli(["calibrate", str(workdir / "s.csv"), "--out", str(workdir / "est.txt")])
    assert run_cli(["apply", str(workdir / "s.csv"), "--params", str(workdir / "est.txt"), "--out", str(workdir / "c.csv")]) == 0
    raw, fixed = read_stream(workdir / "s.csv"), read_stream(workdir / "c.csv")
    rest = slice(500, 3500)
    assert abs(np.linalg.norm(fixed.accel[rest].mean(axis=0)) - 9.80665) < 1e-3
    assert abs(np.linalg.norm(raw.accel[rest].mean(axis=0)) - 9.80665) > 1e-2
    np.testing.assert_array_equal(fixed.accel2, raw.accel2)


def test_detect_static(workdir, capsys):
    assert run_cli(["detect-static", str(workdir / "s.csv")]) == 0
    cap = capsys.readouterr()
    lines = cap.out.splitlines()
    assert lines[0] == "start,end,duration,mean_ax,mean_ay,mean_az"
    assert len(lines) == 13
    assert "segments=12" in cap.err
    assert run_cli(["detect-static", str(workdir / "s.csv"), "--k", "3"]) == 0


def test_ec_pipeline(workdir, capsys):
    d = workdir
    assert run_cli(["ec-encode", str(d / "s.csv"), "--window", "4", "--out", str(d / "p.csv")]) == 0
    assert run_cli(["ec-channel", str(d / "p.csv"), "--loss", "iid:0.05", "--seed", "1", "--out", str(d / "r.csv")]) == 0
    n = len((d / "p.csv").read_text().splitlines()) - 1
    assert run_cli(["ec-decode", str(d / "r.csv"), "--window", "4", "--count", str(n), "--out", str(d / "g.csv")]) == 0
    sent = {l.split(",")[0]: l.split(",")[1] for l in (d / "p.csv").read_text().splitlines()[1:]}
    got = (d / "g.csv").read_text().splitlines()[1:]
    assert len(got) > 0.99 * n
    assert all(sent[i] == v for i, v in (l.split(",") for l in got))


def test_config_file_is_used(workdir, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("detector.required_min_segments = 13\n")
    assert run_cli(["calibrate", str(workdir / "s.csv"), "--config", str(cfg)]) == 5
    assert "underdetermined" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, code, word",
    [
        (["frobnicate"], 2, "usage"),
        (["calibrate"], 2, "usage"),
        (["simulate", "--n", "three"], 2, "usage"),
        (["ec-channel", "x.csv", "--loss", "iid:0.1", "--seed"], 2, "usage"),
        (["calibrate", "/nonexistent.csv"], 3, "bad-input"),
    ],
)
def test_error_exit_codes(argv, code, word, capsys):
    assert run_cli(argv) == code
    err = capsys.readouterr().err
    assert err.startswith("error: ") and word in err
    assert err.count("\n") == 1


def test_underdetermined_exit_code(tmp_path, capsys):
    run_cli(["simulate", "--n", "8", "--out", str(tmp_path / "s8.csv")])
    assert run_cli(["calibrate", str(tmp_path / "s8.csv")]) == 5
    assert capsys.readouterr().err.startswith("error: underdetermined [detect]:")


def test_malformed_stream_exit_code(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("packet_index,t\n")
    assert run_cli(["calibrate", str(tmp_path / "bad.csv")]) == 3
    assert "bad-input" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert run_cli(["--help"]) == 0
    assert "calibrate" in capsys.readouterr().out


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "imucal.cli", "detect-static"], capture_output=True, text=True)
    assert r.returncode == 2
