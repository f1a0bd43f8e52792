import os

import numpy as np
import pytest

from ksfluid.config import build_initial_state
from ksfluid.errors import SnapshotError
from ksfluid.functionals import SERIES_COLUMNS, Recorder
from ksfluid.io import read_series, read_snapshot, write_series, write_snapshot
from ksfluid.stepper import run

from conftest import make_config

HEADER = ("t,dt,mass_n,l1_c,min_c,lower_envelope,F_pr,gronwall_envelope,lq_c,kinetic_u,dirichlet_u,"
          "buoyancy_power,energy_residual,grad_c_lq,dissipation_pr,n2,npc_mix")


def test_header_is_fixed(tmp_path):
    assert ",".join(SERIES_COLUMNS) == HEADER
    write_series([], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == HEADER + "\n"


def test_one_record(tmp_path):
    state = build_initial_state(make_config("[n0]\nvalue = 0.3\n"))
    rec = Recorder(make_config().analysis)
    rec(state)
    write_series(rec.series, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split(",")) == 17


def test_series_roundtrip_is_lossless(tmp_path):
    res = run(make_config("[n0]\nkind = gaussian\namplitude = 1\n", T_end=0.03))
    write_series(res.series, tmp_path / "s.csv")
    back = read_series(tmp_path / "s.csv")
    assert [r.row() for r in back] == [r.row() for r in res.series]


def test_snapshot_layout_4x4(tmp_path):
    cfg = make_config("[n0]\nkind = gaussian\namplitude = 1\n[u0]\nkind = gaussian\namplitude = 1, 1\n", cells=4)
    state = build_initial_state(cfg)
    path = tmp_path / "snap.bin"
    write_snapshot(state, path)
    raw = path.read_bytes()
    lines = raw.split(b"\n")
    assert lines[0] == b"KSFLUID-SNAP v1"
    assert lines[1] == b"4 4 0.25 0.25"
    assert lines[2] == b"t=0.0"
    header = len(b"\n".join(lines[:3])) + 1
    blocks = sum(len(f"FIELD {name}\n") for name in ("n", "c", "P", "u0", "u1"))
    assert len(raw) == header + blocks + 3 * 128 + 5 * 4 * 8 + 4 * 5 * 8
    assert raw[header:header + 8] == b"FIELD n\n"
    assert np.frombuffer(raw[header + 8:header + 8 + 128], "<f8").tolist() == state.n.data.ravel().tolist()


@pytest.mark.parametrize("dim", [2, 3])
def test_snapshot_roundtrip_bitwise(tmp_path, dim):
    cfg = make_config("[n0]\nkind = gaussian\namplitude = 1\n[phi]\nkind = linear\ngradient = "
                      + ", ".join(["0"] * (dim - 1) + ["-1"]) + "\n", cells=6, dim=dim, T_end=0.02)
    state = run(cfg).state
    write_snapshot(state, tmp_path / "s.bin")
    snap = read_snapshot(tmp_path / "s.bin")
    assert snap.t == state.t
    assert np.array_equal(snap.n, state.n.data) and np.array_equal(snap.c, state.c.data)
    assert np.array_equal(snap.P, state.fluid.P.data)
    for a, b in zip(snap.u, state.fluid.u.comps):
        assert np.array_equal(a, b)


def test_truncated_snapshot_names_block(tmp_path):
    state = build_initial_state(make_config(cells=4))
    write_snapshot(state, tmp_path / "s.bin")
    raw = (tmp_path / "s.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-10])
    with pytest.raises(SnapshotError, match="u1"):
        read_snapshot(tmp_path / "t.bin")
    (tmp_path / "t.bin").write_bytes(raw[: raw.index(b"FIELD c") + 20])
    with pytest.raises(SnapshotError, match="block c"):
        read_snapshot(tmp_path / "t.bin")
