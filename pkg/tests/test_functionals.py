import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksfluid.analysis import AnalysisParams
from ksfluid.config import build_initial_state
from ksfluid.errors import AdmissibilityError, InsufficientData, SingularityError
from ksfluid.functionals import (SERIES_COLUMNS, FunctionalRecord, Recorder, check_energy_identity, check_gronwall,
                                 check_lower_bound, check_mass, check_nonnegative, gronwall_excess, record,
                                 time_integrals)
from ksfluid.grid import ScalarField

from conftest import make_config

P = AnalysisParams()


def const_state(n=2.0, c=2.0, length=1.0):
    cfg = make_config(f"[n0]\nvalue = {n}\n[c0]\nvalue = {c}\n")
    return build_initial_state(cfg)


def series_of(values, **cols):
    """Records with ``t = 0, 1, ...`` and the given columns."""
    recs = []
    for k, _ in enumerate(values):
        base = dict.fromkeys(SERIES_COLUMNS, 1.0)
        base["t"] = float(k)
        for name, col in cols.items():
            base[name] = col[k]
        recs.append(FunctionalRecord(**base))
    return recs


def test_constant_state_closed_forms():
    rec = record(const_state(), P, min_c0=2.0)
    assert rec.mass_n == pytest.approx(2.0, rel=1e-14)
    assert rec.F_pr == pytest.approx(2 * math.sqrt(2), rel=1e-14)
    assert rec.dissipation_pr == 0.0
    assert rec.kinetic_u == rec.dirichlet_u == rec.buoyancy_power == rec.energy_residual == 0.0
    assert rec.lower_envelope == 2.0 and rec.gronwall_envelope == rec.F_pr


def test_zero_cells():
    rec = record(const_state(n=0.0), P, min_c0=2.0)
    assert rec.F_pr == rec.n2 == rec.npc_mix == 0.0


def test_column_identities(rng):
    state = const_state()
    state.n = ScalarField(state.n.grid, rng.random(state.n.grid.cells))
    state.c = ScalarField(state.c.grid, 0.5 + rng.random(state.c.grid.cells))
    rec = record(state, AnalysisParams(p=1.0, r=0.0, q=1.0), min_c0=0.5)
    assert rec.F_pr == pytest.approx(rec.mass_n, rel=1e-14)
    assert rec.lq_c == pytest.approx(rec.l1_c, rel=1e-14)


def test_record_refuses_singular_signal():
    state = const_state()
    state.c.data[0, 0] = 0.0
    with pytest.raises(SingularityError):
        record(state, P, min_c0=1.0)


def test_recorder_keeps_initial_values():
    state = const_state()
    rec = Recorder(P)
    rec(state)
    state.t = 1.0
    r1 = rec(state)
    assert r1.lower_envelope == pytest.approx(2 * math.exp(-1))
    assert r1.gronwall_envelope == pytest.approx(2 * math.sqrt(2) * math.exp(0.5))


def test_check_mass():
    ok = check_mass(series_of(range(5), mass_n=[3.0] * 5))
    assert ok.passed and ok.worst == 0
    bad = check_mass(series_of(range(5), mass_n=[3.0, 3.0, 3.0 + 6e-10, 3.0, 3.0]), 1e-10)
    assert not bad.passed and bad.index == 2


def test_check_lower_bound():
    t = np.arange(4.0)
    env = np.exp(-t)
    assert check_lower_bound(series_of(t, min_c=env, lower_envelope=env), 1.0).passed
    mc = env.copy()
    mc[2] *= 0.5
    rep = check_lower_bound(series_of(t, min_c=mc, lower_envelope=env))
    assert not rep.passed and rep.index == 2


def test_lower_bound_discrete_iterates_pass_with_factor_above_one():
    dt = 0.1
    t = dt * np.arange(20)
    mc = (1 + dt) ** (-np.arange(20))
    assert check_lower_bound(series_of(t, min_c=mc, lower_envelope=np.exp(-t)), 1.001).passed


def test_check_gronwall():
    t = np.arange(5.0)
    env = np.exp(0.5 * t)
    assert check_gronwall(series_of(t, F_pr=np.ones(5), gronwall_envelope=env), P, 0.0).passed
    F = env.copy()
    F[3] *= 1.1
    rep = check_gronwall(series_of(t, F_pr=F, gronwall_envelope=env), P, 0.05)
    assert not rep.passed and rep.index == 3
    assert gronwall_excess(series_of(t, F_pr=F, gronwall_envelope=env))[3] == pytest.approx(0.1)
    with pytest.raises(AdmissibilityError):
        check_gronwall(series_of(t), replace(P, r=0.9), 0.05)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.5, 2.0), min_size=2, max_size=8), st.floats(0, 0.5), st.floats(0, 0.5))
def test_checks_monotone_in_tolerance(vals, a, b):
    lo, hi = sorted((a, b))
    t = np.arange(len(vals), dtype=float)
    s = series_of(vals, mass_n=vals, min_c=vals, lower_envelope=[1.0] * len(vals), F_pr=vals,
                  gronwall_envelope=[1.0] * len(vals))
    if check_mass(s, lo).passed:
        assert check_mass(s, hi).passed
    if check_gronwall(s, P, lo).passed:
        assert check_gronwall(s, P, hi).passed
    if check_lower_bound(s, 1 - lo).passed:
        assert check_lower_bound(s, 1 - hi).passed


def test_check_energy_identity():
    with pytest.raises(InsufficientData):
        check_energy_identity(series_of([0]), series_of([0, 1]))
    z = series_of([0, 1, 2], energy_residual=[0.0] * 3)
    assert check_energy_identity(z, z).passed
    a = series_of([0, 1], energy_residual=[0.0, 1e-3])
    b = series_of([0, 1], energy_residual=[0.0, 4e-4])
    assert check_energy_identity(a, b).passed
    assert not check_energy_identity(a, series_of([0, 1], energy_residual=[0.0, 8e-4])).passed


def test_check_nonnegative():
    assert check_nonnegative(series_of([0, 1])).passed
    rep = check_nonnegative(series_of([0, 1], n2=[1.0, -1e-3]))
    assert not rep.passed and "n2" in rep.detail


def test_time_integrals():
    t = np.linspace(0, 2, 9)
    s = series_of(t, t=t, dissipation_pr=[0.0] * 9, dirichlet_u=[3.0] * 9, n2=t, npc_mix=[0.0] * 9)
    out = time_integrals(s)
    assert out["int_dissipation_pr"] == 0.0
    assert out["int_dirichlet_u"] == 6.0
    assert out["int_n2"] == pytest.approx(2.0, rel=1e-15)
