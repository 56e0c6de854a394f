"""Tests for the command-line interface: exit codes, output, file IO."""

import socket
import subprocess
import sys
import time

import pytest

from swabbot.calibration import curve_from_csv, record_from_csv
from swabbot.cli import main
from swabbot.session import load_trace, make_standard_script, save_script
from swabbot.tissue import make_phantom_profile, save_profile

STANDARD_REP_TICKS = 1654  # one repetition plus the 400 ms settle window


# -------------------------------------------------------------- calibrate


def test_calibrate_defaults(tmp_path, capsys):
    rec_path = str(tmp_path / "record.csv")
    crv_path = str(tmp_path / "curve.csv")
    code = main(["calibrate", "--out", rec_path, "--curve-out", crv_path])
    assert code == 0
    out = capsys.readouterr().out
    assert "grid: 6 points, 0..2.5 N" in out
    assert "curve: force =" in out
    record = record_from_csv(open(rec_path).read())
    assert len(record.grid_forces_n) == 6
    curve = curve_from_csv(open(crv_path).read())
    # default rig is linear and noiseless apart from hysteresis
    assert curve.c0 == pytest.approx(-0.375, abs=1e-9)
    assert curve.c1 == pytest.approx(1.25, abs=1e-9)
    assert curve.residual_mean_v == pytest.approx(0.05, abs=1e-12)


def test_calibrate_custom_grid(capsys):
    assert main(["calibrate", "--grid-max", "3.0", "--grid-step", "0.5"]) == 0
    assert "grid: 7 points, 0..3 N" in capsys.readouterr().out


def test_calibrate_bench_saturation_is_runtime_failure(tmp_path, capsys):
    # a compliant beam pushes the sensor past its linear band at the top
    # of a widened grid: the bench refuses to record clipped points
    cfg = tmp_path / "rig.cfg"
    cfg.write_text("beam.max_deflection_mm = 0.8\n")
    code = main(["calibrate", "--config", str(cfg), "--grid-max", "3.5"])
    assert code == 1
    assert "calibration failed:" in capsys.readouterr().err


def test_calibrate_bad_grid_is_usage_error(capsys):
    assert main(["calibrate", "--grid-step", "-1"]) == 2
    assert "config error:" in capsys.readouterr().err


# -------------------------------------------------------------------- run


def test_run_phantom_single_rep(tmp_path, capsys):
    trace_path = str(tmp_path / "trace.csv")
    code = main(["run", "--reps", "1", "--out", trace_path])
    assert code == 0
    out = capsys.readouterr().out
    assert "profile: phantom" in out
    assert "repetitions completed: 1" in out
    assert "safety faults: 0  operator stops: 1" in out
    assert "final phase: IDLE" in out
    assert "pooled: rows=" in out
    assert "rep 1: rows=" in out
    rows = load_trace(trace_path)
    assert len(rows) == STANDARD_REP_TICKS


def test_run_pig_profile_named_by_seed(capsys):
    assert main(["run", "--profile", "pig", "--seed", "2", "--reps", "1"]) == 0
    assert "profile: pig-2" in capsys.readouterr().out


def test_run_profile_from_file(tmp_path, capsys):
    path = str(tmp_path / "custom.profile")
    save_profile(make_phantom_profile(), path)
    assert main(["run", "--profile", path, "--reps", "1"]) == 0
    assert "profile: phantom" in capsys.readouterr().out


def test_run_safety_fault_exits_nonzero(tmp_path, capsys):
    # payload limit lowered below the phantom peak force while the
    # over-range gate stays at its default, so nothing blocks insertion
    # before the hard stop trips mid-pass
    cfg = tmp_path / "rig.cfg"
    cfg.write_text("motion.payload_limit_n = 0.5\n")
    code = main(["run", "--config", str(cfg), "--reps", "1"])
    assert code == 1
    out = capsys.readouterr().out
    assert "safety faults: 1" in out
    assert "safety fault at t=" in out
    assert "repetitions completed: 0" in out


def test_run_custom_script(tmp_path, capsys):
    script_path = str(tmp_path / "script.csv")
    save_script(make_standard_script(1), script_path)
    code = main(["run", "--script", script_path])
    assert code == 0
    assert "repetitions completed: 1" in capsys.readouterr().out


def test_run_unknown_profile_is_usage_error(capsys):
    assert main(["run", "--profile", "/no/such/file.profile"]) == 2
    assert "config error:" in capsys.readouterr().err


def test_run_malformed_script_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_ms,command\n100,CMD 1 ARM\n60,CMD 2 START\n")
    assert main(["run", "--script", str(bad)]) == 2
    assert "input error: row 3" in capsys.readouterr().err


def test_run_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "rig.cfg"
    cfg.write_text("beam.stiffnes = 5.0\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert "unknown configuration key" in capsys.readouterr().err


# ----------------------------------------------------------------- replay


@pytest.fixture()
def phantom_trace(tmp_path):
    path = str(tmp_path / "trace.csv")
    assert main(["run", "--reps", "1", "--out", path]) == 0
    return path


def test_replay_prints_telemetry_lines(phantom_trace, capsys):
    capsys.readouterr()
    code = main(["replay", phantom_trace, "--speed", "100000"])
    assert code == 0
    out = capsys.readouterr().out
    tlm = [l for l in out.splitlines() if l.startswith("TLM ")]
    assert len(tlm) == STANDARD_REP_TICKS
    assert "pooled: rows=" in out


def test_replay_stats_only(phantom_trace, capsys):
    capsys.readouterr()
    assert main(["replay", phantom_trace, "--stats-only"]) == 0
    out = capsys.readouterr().out
    assert not any(l.startswith("TLM ") for l in out.splitlines())
    assert "pooled: rows=" in out
    assert "rep 1: rows=" in out


def test_replay_zero_speed_is_usage_error(phantom_trace, capsys):
    capsys.readouterr()
    assert main(["replay", phantom_trace, "--speed", "0"]) == 2


def test_replay_malformed_trace_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_ms,depth_mm,angle_deg,force_n,raw_v,phase,safety\n"
                   "0,1.0,2.0,oops,0.5,IDLE,OK\n")
    assert main(["replay", str(bad), "--stats-only"]) == 2
    assert "input error: row 2" in capsys.readouterr().err


def test_replay_missing_trace_is_io_error(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "nope.csv")]) == 1
    assert "io error:" in capsys.readouterr().err


# ------------------------------------------------------------------ serve


def test_serve_subprocess_accepts_client():
    proc = subprocess.Popen(
        [sys.executable, "-m", "swabbot.cli", "serve", "--port", "0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        line = proc.stdout.readline()
        assert line.startswith("listening on 127.0.0.1:")
        port = int(line.split(":")[1].split()[0])
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            fh = sock.makefile("rw", encoding="utf-8", newline="\n")
            fh.write("SYN 100\n")
            fh.flush()
            lines = []
            deadline = time.monotonic() + 5
            while time.monotonic() < deadline:
                got = fh.readline().rstrip("\n")
                lines.append(got)
                if got.startswith("ACK"):
                    break
            assert lines[0] == "CFG 2.5000 3.5000"
            assert lines[-1] == "ACK 100"
            assert any(l.startswith("TLM ") for l in lines)
    finally:
        proc.terminate()
        proc.wait(timeout=10)
