import os

import pytest

from ambistop.cli import main, parse_range, read_config
from ambistop.errors import ConfigError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_range_forms():
    assert parse_range("0:1:4") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_range("0.05,0.075,0.1") == [0.05, 0.075, 0.1]
    assert parse_range("2.5") == [2.5]


@pytest.mark.parametrize("bad", ["1:0:4", "0:1:0", "0:1", "a,b", ""])
def test_parse_range_rejects(bad):
    with pytest.raises((ConfigError, ValueError)):
        parse_range(bad)


def test_read_config(tmp_path):
    p = tmp_path / "m.cfg"
    p.write_text("mu = 0.02  # drift\nsigma=0.1\nr=0.05\nkappa=0.5\npayoff=exchange\nstrike=0.5\n")
    cfg = read_config(str(p))
    assert cfg["mu"] == "0.02" and cfg["payoff"] == "exchange"
    bad = tmp_path / "bad.cfg"
    bad.write_text("mu 0.02\n")
    with pytest.raises(ConfigError):
        read_config(str(bad))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

MODEL = ["--mu", "0", "--sigma", "0.5", "--r", "0.05", "--kappa", "0.5"]


def test_roots_command(capsys):
    code, out, _ = run_cli(capsys, "roots", *MODEL)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "drift_sign,psi,phi,b"
    assert len(lines) == 3


def test_boundary_command_floor_two_sided(capsys):
    code, out, _ = run_cli(capsys, "boundary", "--mu", "0", "--sigma", "0.5",
                           "--r", "0.05", "--kappa", "1.75", "--payoff", "floor")
    assert code == 0
    row = out.strip().splitlines()[1].split(",")
    assert row[1] == "two-sided"
    assert float(row[2]) == pytest.approx(0.0854, abs=1e-2)
    assert float(row[3]) == pytest.approx(22.6858, abs=1e-2)


def test_value_curve_dominates_payoff(capsys):
    code, out, _ = run_cli(capsys, "value-curve", *MODEL, "--payoff", "floor",
                           "--z", "0:60:60")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    for z, g, v, theta in rows:
        assert float(v) >= float(g) - 1e-9
        if float(z) > 28.0:
            assert float(v) == pytest.approx(float(g))


def test_critical_kappa_command(capsys):
    code, out, _ = run_cli(capsys, "critical-kappa", "--mu", "0",
                           "--sigma", "0.5", "--r", "0.05")
    assert code == 0
    assert float(out.strip().splitlines()[1].split(",")[-1]) == pytest.approx(
        1.59795, abs=1e-3)


def test_sweep_monotone_and_deterministic(tmp_path, capsys):
    args = ["sweep-kappa", "--payoff", "integral", "--mu", "0.02", "--r", "0.05",
            "--sigma", "0.05,0.1", "--kappa", "0:1:5"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    os.environ["AMBISTOP_THREADS"] = "2"
    try:
        assert main(args + ["--out", str(out2)]) == 0
    finally:
        del os.environ["AMBISTOP_THREADS"]
    assert out1.read_bytes() == out2.read_bytes()
    rows = [line.split(",") for line in out1.read_text().strip().splitlines()[1:]]
    by_sigma = {}
    for s, k, b, _, _ in rows:
        by_sigma.setdefault(float(s), []).append(float(b))
    for vals in by_sigma.values():
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_config_file_with_flag_override(tmp_path, capsys):
    p = tmp_path / "m.cfg"
    p.write_text("mu=0\nsigma=0.5\nr=0.05\nkappa=0.5\npayoff=floor\n")
    code, out, _ = run_cli(capsys, "--config", str(p), "boundary")
    assert code == 0
    assert out.strip().splitlines()[1].split(",")[1] == "lower"
    # flag wins over the file
    code, out, _ = run_cli(capsys, "--config", str(p), "boundary",
                           "--kappa", "1.75")
    assert out.strip().splitlines()[1].split(",")[1] == "two-sided"


def test_simulate_command(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    code = main(["simulate", *MODEL, "--payoff", "integral", "--paths", "2000",
                 "--dt", "0.001", "--t-max", "40", "--seed", "7",
                 "--y0", "40.0", "--out", str(out)])
    assert code == 0
    header, row = out.read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert float(cols["mean"]) == 40.0  # immediate stop
    assert cols["quantity"] == "mc_value"


def test_verify_quick_subset(capsys):
    code, out, _ = run_cli(capsys, "verify", "--criteria", "2,6", "--quick")
    assert code == 0
    assert out.count("[PASS]") == 2


# ---------------------------------------------------------------------------
# error handling / exit codes
# ---------------------------------------------------------------------------

def test_missing_parameter_exit_code(capsys):
    code, _, err = run_cli(capsys, "boundary", "--mu", "0")
    assert code == 2
    assert err.startswith("error: ConfigError")


def test_invalid_model_exit_code(capsys):
    code, _, err = run_cli(capsys, "boundary", "--mu", "0", "--sigma", "-1",
                           "--r", "0.05", "--kappa", "0")
    assert code == 2
    assert "NonPositiveSigma" in err


def test_solver_error_exit_code(capsys):
    # no sign change on a tiny kappa interval
    code, _, err = run_cli(capsys, "critical-kappa", "--mu", "0",
                           "--sigma", "0.5", "--r", "0.05", "--kappa-max", "0.5")
    assert code == 3
    assert "NoSignChange" in err


def test_bad_payoff_exit_code(capsys):
    code, _, err = run_cli(capsys, "boundary", *MODEL, "--payoff", "exchange")
    assert code == 2  # missing strike
