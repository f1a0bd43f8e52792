import numpy as np
import pytest

from ksfluid.errors import ConfigError
from ksfluid.fluid import FluidState, fluid_step, initial_pressure, project
from ksfluid.functionals import kinetic_energy
from ksfluid.grid import GridSpec, MacVectorField, ScalarField
from ksfluid.operators import divergence, gradient_to_faces


def max_div(u):
    return float(np.max(np.abs(divergence(u).data)))


def test_project_divfree_input_is_unchanged(rng):
    g = GridSpec.square(16)
    u, _ = project(MacVectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(2)]))
    v, q = project(u)
    assert max(np.max(np.abs(a - b)) for a, b in zip(u.comps, v.comps)) < 1e-10
    assert np.max(np.abs(q.data)) < 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_project_annihilates_gradients(rng, dim):
    g = GridSpec.square(8, dim=dim)
    psi = ScalarField(g, rng.standard_normal(g.cells))
    u, q = project(MacVectorField(g, gradient_to_faces(psi).comps))
    assert u.max_abs() < 1e-9
    assert abs(q.data.mean()) < 1e-14


@pytest.mark.parametrize("preconditioner", ["diagonal", "multigrid"])
def test_project_random_field(rng, preconditioner, backend):
    g = GridSpec(2, (1.0, 1.5), (12, 18))
    u, q = project(MacVectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(2)]),
                   dt=0.01, tol=1e-10, preconditioner=preconditioner)
    assert max_div(u) <= 1e-10
    assert abs(q.data.mean()) < 1e-12
    assert np.all(u.comps[0][[0, -1]] == 0) and np.all(u.comps[1][:, [0, -1]] == 0)


def _state(g, u=None):
    return FluidState(u if u is not None else MacVectorField(g), ScalarField(g))


@pytest.mark.parametrize("kappa", [0, 1])
def test_hydrostatic_rest_state(kappa):
    g = GridSpec.square(16)
    n = ScalarField.constant(g, 2.0)
    phi = ScalarField.from_function(g, lambda x, y: 3 * x - y)
    st = _state(g)
    st.P = initial_pressure(st.u, n, phi, kappa)
    for _ in range(5):
        st = fluid_step(st, n, phi, kappa, 0.01)
    assert st.u.max_abs() < 1e-12
    assert abs(st.P.data.mean()) < 1e-14


def test_constant_phi_keeps_rest():
    g = GridSpec.square(8)
    rng = np.random.default_rng(1)
    st = fluid_step(_state(g), ScalarField(g, rng.random(g.cells)), ScalarField.constant(g, 4.0), 0, 0.1)
    assert st.u.max_abs() < 1e-12


def test_buoyant_plume_stays_divergence_free():
    g = GridSpec.square(16)
    n = ScalarField.from_function(g, lambda x, y: np.exp(-((x - 0.3) ** 2 + (y - 0.5) ** 2) / 0.02))
    phi = ScalarField.from_function(g, lambda x, y: -y)
    st = _state(g)
    for _ in range(5):
        st = fluid_step(st, n, phi, 1, 0.01)
        assert max_div(st.u) <= st.poisson_tol
    assert st.u.max_abs() > 1e-4


def test_unforced_kinetic_energy_decreases(rng):
    g = GridSpec.square(16)
    u, _ = project(MacVectorField(g, [rng.standard_normal(g.face_shape(d)) for d in range(2)]))
    st = _state(g, u)
    zero = ScalarField(g)
    k = kinetic_energy(st.u)
    for _ in range(5):
        st = fluid_step(st, zero, zero, 0, 0.005)
        k_new = kinetic_energy(st.u)
        assert k_new <= k
        k = k_new


def test_navier_stokes_rejected_in_3d():
    g = GridSpec.square(4, dim=3)
    with pytest.raises(ConfigError):
        fluid_step(_state(g), ScalarField(g), ScalarField(g), 1, 0.1)
