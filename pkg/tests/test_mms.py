import numpy as np
import pytest

from ksfluid.config import build_initial_state, load_config
from ksfluid.mms import ManufacturedSolution, observed_orders, run_fixed_dt, spatial_study, temporal_study
from ksfluid.operators import divergence
from ksfluid.stepper import step

from conftest import make_config

MMS_BODY = """
[phi]
kind = linear
gradient = 0, -1
[scheme]
advection = central
n_face = central
[mms]
enabled = true
"""


@pytest.fixture(scope="module")
def cfg():
    return make_config(MMS_BODY, cells=16, kappa=1, T_end=0.05)


def test_exact_velocity_is_discretely_solenoidal(cfg):
    u = ManufacturedSolution(cfg).velocity(0.3)
    assert np.max(np.abs(divergence(u).data)) < 1e-12


def test_exact_velocity_vanishes_on_walls(cfg):
    u = ManufacturedSolution(cfg).velocity(0.0)
    assert np.all(u.comps[0][[0, -1], :] == 0) and np.all(u.comps[1][:, [0, -1]] == 0)


def test_initial_state_is_exact(cfg):
    state = build_initial_state(cfg)
    err = ManufacturedSolution(cfg).errors(state)
    assert err["n"] == 0 and err["c"] == 0
    assert err["u"] < 1e-12


def test_exact_solution_conserves_mass(cfg):
    ms = ManufacturedSolution(cfg)
    masses = [np.sum(ms.exact(t)[0].data) for t in (0.0, 0.5, 1.0)]
    assert np.allclose(masses, masses[0], rtol=1e-13)


def test_sources_are_finite_and_time_dependent(cfg):
    ms = ManufacturedSolution(cfg)
    s0, s1 = ms.sources(0.0), ms.sources(0.1)
    for arr in (s0.n, s0.c, *s0.u.comps):
        assert np.all(np.isfinite(arr))
    assert not np.allclose(s0.n, s1.n)


def test_one_step_error_is_small(cfg):
    state = build_initial_state(cfg)
    ms = ManufacturedSolution(cfg)
    state = step(state, cfg.control, cfg, 1e-3, ms)
    err = ms.errors(state)
    assert max(err.values()) < 1e-2


def test_run_fixed_dt_requires_mms():
    with pytest.raises(ValueError):
        run_fixed_dt(make_config(cells=8), 0.01, 0.02)


def test_observed_orders_oracle():
    assert observed_orders([4.0, 1.0, 0.25]) == pytest.approx([2.0, 2.0])
    assert observed_orders([1.0, 0.5], ratio=2) == pytest.approx([1.0])


def test_spatial_order_small_grids(cfg):
    errs = spatial_study(cfg, cells=(8, 16, 32))
    for key in ("n", "c", "u"):
        assert min(observed_orders([e[key] for e in errs])) >= 1.8, key


def test_temporal_order_cell_density(cfg):
    errs = temporal_study(cfg, steps=(10, 20), T=0.5)
    assert observed_orders([e["n"] for e in errs])[0] >= 0.9


def test_mms_rejects_nonlinear_phi(tmp_path):
    from ksfluid.errors import ValidationError

    (tmp_path / "phi.txt").write_text("\n".join(["0.0"] * 64))
    body = MMS_BODY.replace("kind = linear\ngradient = 0, -1", "kind = file\nfile = phi.txt")
    with pytest.raises(ValidationError, match="linear phi"):
        make_config(body, cells=8, base_dir=str(tmp_path))
