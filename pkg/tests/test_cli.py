import os
import subprocess
import sys
import textwrap

import pytest

from ksfluid.cli import EXIT_FAILURE, EXIT_OK, EXIT_SINGULAR, exit_code, main, parse_range
from ksfluid.io import read_series, read_snapshot
from ksfluid.stepper import Status

STEADY = """
[grid]
dim = 2
cells = 8
[model]
chi = 0.5
kappa = 1
T_end = 0.05
[phi]
kind = linear
gradient = 0, -1
[n0]
value = 2
[c0]
value = 2
"""

SINGULAR = """
[grid]
dim = 2
cells = 8
[model]
chi = 0.5
T_end = 1.0
[n0]
value = 0
[c0]
value = 0.01
[control]
c_floor = 0.005
"""


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def test_exit_code_mapping():
    assert exit_code(Status.COMPLETED) == EXIT_OK
    assert exit_code(Status.BLOWUP) == EXIT_SINGULAR
    assert exit_code(Status.SINGULARITY) == EXIT_SINGULAR
    for s in (Status.TIMESTEP_COLLAPSE, Status.SOLVER_DIVERGENCE, Status.POSITIVITY, Status.NONFINITE):
        assert exit_code(s) == EXIT_FAILURE


def test_params_in_regime(capsys):
    assert main(["params", "--N", "2", "--chi", "0.5", "--p", "2", "--r", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "I_p=(0.1464466,0.8535534)" in out
    assert "all_gates=pass" in out


def test_params_out_of_regime(capsys):
    assert main(["params", "--N", "2", "--chi", "0.5", "--p", "2", "--r", "0.9"]) == 1
    assert "gate[r in I_p]=FAIL" in capsys.readouterr().out


def test_params_bad_dimension(capsys):
    assert main(["params", "--N", "4", "--chi", "0.5", "--p", "2"]) == 1


def test_simulate_writes_series_and_snapshots(tmp_path, capsys):
    cfg = write(tmp_path, STEADY)
    out = tmp_path / "out"
    assert main(["simulate", cfg, "--out", str(out), "--snapshots", "2"]) == 0
    series = read_series(out / "series.csv")
    assert series[0].t == 0.0 and series[-1].t == pytest.approx(0.05)
    snaps = sorted(os.listdir(out))
    assert "snap_0001.bin" in snaps and "snap_0002.bin" in snaps
    snap = read_snapshot(out / "snap_0002.bin")
    assert snap.t == pytest.approx(0.05)
    assert snap.n.shape == (8, 8)
    assert "status=Completed" in capsys.readouterr().out


def test_simulate_singularity_exit_code(tmp_path):
    assert main(["simulate", write(tmp_path, SINGULAR), "--out", str(tmp_path / "o")]) == EXIT_SINGULAR


def test_simulate_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, STEADY + "\n[model2]\nx = 1\n")
    assert main(["simulate", cfg]) == EXIT_FAILURE
    assert "model2" in capsys.readouterr().err


def test_simulate_missing_file(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.ini")]) == EXIT_FAILURE


def test_verify_constant_state(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", write(tmp_path, STEADY), "--out", str(out)]) == 0
    report = (out / "verify_report.txt").read_text().splitlines()
    names = [line.split()[0] for line in report[:6]]
    assert names == ["run", "mass", "lower_bound", "gronwall", "energy_identity", "nonnegativity"]
    assert all(" PASS " in line for line in report[:6])
    assert any(line.startswith("int_n2=") for line in report)
    assert (out / "series_half_dt.csv").exists()


def test_verify_reports_inadmissible_gronwall(tmp_path, capsys):
    cfg = write(tmp_path, STEADY + "\n[analysis]\np = 2\nr = 0.9\n")
    assert main(["verify", cfg, "--out", str(tmp_path / "v")]) == EXIT_FAILURE
    assert "gronwall FAIL" in capsys.readouterr().out


def test_parse_range():
    assert parse_range("0.5:1.5:3") == [0.5, 1.0, 1.5]
    assert parse_range("2:2:1") == [2.0]
    import argparse

    for bad in ("1:2", "a:b:c", "0:1:0", "0:1:1"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_range(bad)


def test_scan_labels_regimes(tmp_path, capsys):
    out = tmp_path / "scan"
    cfg = write(tmp_path, STEADY)
    assert main(["scan", cfg, "--chi", "0.5:1.5:2", "--out", str(out)]) == 0
    rows = (out / "scan_summary.csv").read_text().splitlines()
    assert rows[0] == "chi,status,max_n,min_c,regime"
    assert rows[1].endswith(",theorem") and rows[2].endswith(",exploratory")
    assert (out / "chi_000" / "series.csv").exists() and (out / "chi_001" / "series.csv").exists()


def test_scan_parallel_matches_serial(tmp_path):
    cfg = write(tmp_path, STEADY)
    main(["scan", cfg, "--chi", "0.2:0.6:2", "--out", str(tmp_path / "a")])
    main(["scan", cfg, "--chi", "0.2:0.6:2", "--out", str(tmp_path / "b"), "--jobs", "2"])
    assert (tmp_path / "a" / "scan_summary.csv").read_bytes() == (tmp_path / "b" / "scan_summary.csv").read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ksfluid", "params", "--N", "3", "--chi", "0.5", "--p", "2"],
                          capture_output=True, text=True)
    assert proc.returncode in (0, 1)
    assert "chi_bound=0.8164966" in proc.stdout
