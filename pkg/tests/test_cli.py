import subprocess
import sys

import pytest

from ratelab.experiments import parse_summary

RUN_OK = [
    "run",
    "--problem", "quadratic:dim=8,seed=1,lo=0.1,hi=10",
    "--solver", "gd_fixed:alpha=inv_L",
    "--budget", "20000",
]


def cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "ratelab.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=180,
    )


def test_run_pass_exit_zero_and_summary_on_stdout():
    proc = cli(*RUN_OK)
    assert proc.returncode == 0, proc.stderr
    kv = parse_summary(proc.stdout)
    assert kv["overall.pass"] == "true"
    assert kv["run.budget"] == "20000"


def test_run_verdict_failure_exit_one():
    # an ill-conditioned instance cannot flush the transient in 300 steps
    proc = cli(
        "run",
        "--problem", "quadratic:dim=8,seed=1",
        "--solver", "gd_fixed:alpha=inv_L",
        "--budget", "300",
    )
    assert proc.returncode == 1
    kv = parse_summary(proc.stdout)
    assert kv["overall.pass"] == "false"


def test_invalid_configs_exit_two(tmp_path):
    assert cli("run", "--problem", "quadratic:dim=8", "--solver", "warp_drive",
               "--budget", "500").returncode == 2
    assert cli("run", "--problem", "quadratic:dim=8", "--solver", "gd_fixed",
               "--budget", "50").returncode == 2
    assert cli("check", str(tmp_path / "absent.csv")).returncode == 2
    assert cli("tightness", "--p", "5").returncode == 2


def test_solver_abort_exit_three():
    # steps below the validation cap but past the safeguard blow up mid-run
    proc = cli("tightness", "--p", "4", "--alpha", "0.15", "--budget", "1000")
    assert proc.returncode == 3
    assert "abort" in (proc.stdout + proc.stderr).lower()


def test_unwritable_out_exit_three(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    proc = cli(*RUN_OK, "--out", str(blocker / "sub"))
    assert proc.returncode == 3


def test_run_artifacts_and_rerun_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli(*RUN_OK, "--seeds", "0:2", "--out", str(a)).returncode == 0
    assert cli(*RUN_OK, "--seeds", "0:2", "--out", str(b)).returncode == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == [
        "snapshots_seed0.csv",
        "snapshots_seed1.csv",
        "summary.txt",
        "trace_seed0.csv",
        "trace_seed1.csv",
    ]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_check_round_trip(tmp_path):
    out = tmp_path / "run"
    assert cli(*RUN_OK, "--out", str(out)).returncode == 0
    proc = cli("check", str(out / "trace_seed0.csv"))
    assert proc.returncode == 0, proc.stdout
    kv = parse_summary(proc.stdout)
    assert kv["verdict.monotone.pass"] == "true"
    assert kv["verdict.summable.pass"] == "true"


def test_check_replays_linesearch_gamma(tmp_path):
    out = tmp_path / "ls"
    proc = cli(
        "run",
        "--problem", "quadratic:dim=8,seed=1,lo=0.1,hi=10",
        "--solver", "gd_linesearch:init=bb",
        "--budget", "20000",
        "--out", str(out),
    )
    assert proc.returncode == 0
    proc2 = cli("check", str(out / "trace_seed0.csv"), "--gamma", "0.5")
    assert proc2.returncode == 0
    kv = parse_summary(proc2.stdout)
    assert kv["verdict.replay.pass"] == "true"


def test_tightness_subcommand(tmp_path):
    out = tmp_path / "tight"
    proc = cli(
        "tightness", "--p", "4", "--budget", "20000",
        "--fit-lo", "200", "--fit-hi", "20000", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stdout
    kv = parse_summary(proc.stdout)
    assert kv["verdict.exponent.pass"] == "true"
    assert (out / "trace_monomial.csv").exists()
    assert (out / "summary.txt").exists()


def test_flow_subcommand():
    proc = cli("flow", "--p", "6", "--steps", "2000")
    assert proc.returncode == 0, proc.stdout
    kv = parse_summary(proc.stdout)
    assert kv["overall.pass"] == "true"
    assert float(kv["verdict.deviation.value"]) <= 1e-6


def test_help_and_missing_args():
    assert cli("--help").returncode == 0
    assert cli("run", "--help").returncode == 0
    bad = cli("run", "--problem", "quadratic:dim=4")
    assert bad.returncode == 2  # budget and solver are required
    assert cli().returncode == 2


@pytest.mark.parametrize("flag", ["--seeds", "--stride", "--fstar"])
def test_run_optional_flags_accepted(tmp_path, flag):
    value = {"--seeds": "3", "--stride": "all", "--fstar": "0.0"}[flag]
    proc = cli(
        "run",
        "--problem", "quadratic:dim=6,seed=2,lo=0.5,hi=5",
        "--solver", "gd_fixed:alpha=inv_L",
        "--budget", "500",
        flag, value,
    )
    assert proc.returncode == 0, proc.stdout
