import numpy as np
import pytest

from ksfluid.errors import SolverDivergence
from ksfluid.solvers import HALF_WALL, MIRROR, NODE_WALL, Multigrid, StencilOperator, make_preconditioner, pcg, \
    solve_conservative


@pytest.mark.parametrize("s", [MIRROR, HALF_WALL, NODE_WALL])
def test_operator_is_symmetric(s, backend):
    op = StencilOperator((5, 6), (0.2, 0.1), 1.0, 0.3, (s, MIRROR), (MIRROR, s))
    A = op.dense()
    assert np.allclose(A, A.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(A) > 0)


def test_neumann_poisson_nullspace_is_constants():
    op = StencilOperator((6, 6), (1 / 6, 1 / 6), 0.0, 1.0)
    assert op.singular
    A = op.dense()
    assert np.allclose(A @ np.ones(36), 0)
    w = np.linalg.eigvalsh(A)
    assert abs(w[0]) < 1e-10 and w[1] > 1e-3


@pytest.mark.parametrize("kind", ["diagonal", "multigrid"])
@pytest.mark.parametrize("n", [16, 32])
def test_pcg_solves_neumann_poisson(kind, n, rng, backend):
    op = StencilOperator((n, n), (1 / n, 1 / n), 0.0, 1.0)
    x_true = rng.standard_normal(op.shape)
    x_true -= x_true.mean()
    b = op.apply(x_true)
    x, it = pcg(op, b, precond=make_preconditioner(op, kind), rtol=1e-12, max_iter=2000)
    x -= x.mean()
    assert np.max(np.abs(x - x_true)) < 1e-6
    if kind == "multigrid":
        assert it <= 15


def test_multigrid_iterations_are_mesh_independent(rng):
    counts = []
    for n in (32, 64, 128):
        op = StencilOperator((n, n), (1 / n, 1 / n), 0.0, 1.0)
        b = rng.standard_normal(op.shape)
        b -= b.mean()
        _, it = pcg(op, b, precond=Multigrid(op), rtol=1e-10, max_iter=100)
        counts.append(it)
    assert max(counts) - min(counts) <= 2


def test_multigrid_three_dimensional(rng):
    op = StencilOperator((16, 16, 16), (1 / 16,) * 3, 0.0, 1.0)
    b = rng.standard_normal(op.shape)
    b -= b.mean()
    _, it = pcg(op, b, precond=Multigrid(op), rtol=1e-10, max_iter=100)
    assert it <= 15


def test_solve_conservative_matches_mass(rng):
    op = StencilOperator((10, 12), (0.1, 0.1), 1.3, 0.01)
    b = rng.random(op.shape)
    x, _ = solve_conservative(op, b)
    assert op.alpha * x.sum() == pytest.approx(b.sum(), rel=1e-14)
    assert np.max(np.abs(op.apply(x) - b)) < 1e-10


def test_pcg_reports_divergence():
    op = StencilOperator((32, 32), (1 / 32, 1 / 32), 0.0, 1.0)
    b = np.random.default_rng(0).standard_normal(op.shape)
    b -= b.mean()
    with pytest.raises(SolverDivergence):
        pcg(op, b, rtol=1e-14, max_iter=3)
