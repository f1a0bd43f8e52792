"""Pressure-projection step for the Stokes / Navier-Stokes subsystem.

The momentum equation is implemented as ``u_t + kappa (u.grad)u = lap u - grad P + n grad(phi)``;
the opposite sign printed for the pressure term in the model only renames P.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SolverDivergence
from .grid import MacVectorField, ScalarField
from .operators import divergence, face_average, gradient_to_faces, nonlinear_advection
from .solvers import HALF_WALL, MIRROR, NODE_WALL, StencilOperator, make_preconditioner, pcg

DEFAULT_POISSON_TOL = 1e-10


@dataclass
class FluidState:
    u: MacVectorField
    P: ScalarField
    poisson_tol: float = DEFAULT_POISSON_TOL
    poisson_max_iter: int = 500
    preconditioner: str = "multigrid"
    last_iterations: int = field(default=0, compare=False)

    def copy(self):
        return FluidState(self.u.copy(), self.P.copy(), self.poisson_tol, self.poisson_max_iter,
                          self.preconditioner)


class _PoissonCache:
    """Reuse the Neumann operator and its preconditioner across steps."""

    def __init__(self):
        self._store = {}

    def get(self, grid, kind):
        key = (grid, kind)
        if key not in self._store:
            op = StencilOperator(grid.cells, grid.h, 0.0, 1.0)
            self._store[key] = (op, make_preconditioner(op, kind))
        return self._store[key]


_poisson = _PoissonCache()


def solve_pressure_poisson(rhs: np.ndarray, grid, tol_abs: float, max_iter: int, precond="multigrid",
                           x0=None):
    """Solve ``lap_h q = rhs`` with Neumann closure; returns zero-mean ``q``."""
    op, M = _poisson.get(grid, precond)
    b = -(rhs - rhs.mean())
    b3 = b.reshape(op.shape)
    q, it = pcg(op, b3, x0=None if x0 is None else x0.reshape(op.shape), precond=M, atol=tol_abs,
                rtol=0.0, max_iter=max_iter, what="pressure Poisson solve")
    q = q.reshape(grid.cells)
    return q - q.mean(), it


def project(u_star: MacVectorField, dt: float = 1.0, tol: float = DEFAULT_POISSON_TOL,
            max_iter: int = 500, preconditioner: str = "multigrid"):
    """Remove the discrete gradient part of ``u_star``.

    Solves ``lap_h q = div(u_star)/dt`` and returns ``(u_star - dt grad q, q)``
    with ``max|div u| <= tol``.
    """
    grid = u_star.grid
    u_star = u_star.copy().enforce_bc()
    div = divergence(u_star).data
    if float(np.max(np.abs(div))) <= 0.5 * tol:
        return u_star, ScalarField(grid)
    q = None
    budget = max_iter
    # the CG residual is the post-projection divergence divided by dt
    atol = 0.25 * tol / dt
    while True:
        q_new, it = solve_pressure_poisson(div / dt, grid, atol, budget, preconditioner, x0=q)
        q = q_new
        budget -= max(it, 1)
        g = gradient_to_faces(ScalarField(grid, q))
        u = MacVectorField(grid, [a - dt * b for a, b in zip(u_star.comps, g.comps)])
        worst = float(np.max(np.abs(divergence(u).data)))
        if worst <= tol:
            return u, ScalarField(grid, q)
        if budget <= 0 or atol < 1e-300:
            raise SolverDivergence(f"projection left divergence {worst:.3e} > {tol:.1e}")
        atol *= 0.1


def force_faces(n: ScalarField, phi: ScalarField) -> MacVectorField:
    """Buoyancy ``n grad(phi)`` on the faces, with the projection's own gradient."""
    g = gradient_to_faces(phi)
    return MacVectorField(n.grid, [face_average(n, d) * g.comps[d] for d in range(n.grid.dim)])


def _viscous_operator(grid, d, alpha, beta):
    shape = list(grid.cells)
    shape[d] -= 1
    s = [HALF_WALL] * grid.dim
    s[d] = NODE_WALL
    return StencilOperator(shape, grid.h, alpha, beta, s, s)


class _ViscousCache:
    def __init__(self):
        self._store = {}

    def get(self, grid, d, dt):
        key = (grid, d, dt)
        if key not in self._store:
            if len(self._store) > 64:
                self._store.clear()
            op = _viscous_operator(grid, d, 1.0, dt)
            self._store[key] = op
        return self._store[key]


_viscous = _ViscousCache()


def vector_laplacian(u: MacVectorField) -> MacVectorField:
    """``lap_h`` of each velocity component at the interior faces."""
    grid = u.grid
    out = []
    for d in range(grid.dim):
        op = _viscous_operator(grid, d, 0.0, 1.0)
        lap = -op.apply(np.ascontiguousarray(u.interior(d)).reshape(op.shape))
        full = np.zeros(grid.face_shape(d))
        idx = [slice(None)] * grid.dim
        idx[d] = slice(1, -1)
        full[tuple(idx)] = lap.reshape(u.interior(d).shape)
        out.append(full)
    return MacVectorField(grid, out)


def initial_pressure(u: MacVectorField, n: ScalarField, phi: ScalarField, kappa: int,
                     tol=DEFAULT_POISSON_TOL, max_iter=500, preconditioner="multigrid", source=None):
    """Pressure whose gradient balances the initial forcing.

    With this start the incremental scheme keeps a hydrostatic state at rest
    from the first step on.
    """
    rhs = force_faces(n, phi) + vector_laplacian(u)
    if kappa:
        rhs = rhs - nonlinear_advection(u)
    if source is not None:
        rhs = rhs + source
    # lap_h u scales like 1/h^2 near the walls, so an absolute target can sit below round-off
    scale = float(np.max(np.abs(divergence(rhs.copy().enforce_bc()).data)))
    _, q = project(rhs, 1.0, max(tol, 1e-13 * scale), max_iter, preconditioner)
    return q


def fluid_step(state: FluidState, n: ScalarField, phi: ScalarField, kappa: int, dt: float,
               source: MacVectorField | None = None) -> FluidState:
    """One incremental pressure-correction step.

    ``(I - dt lap_h) u* = u + dt (n grad(phi) - grad P - kappa N(u) + source)``
    componentwise, then ``(u, q) = project(u*)`` and ``P <- P + q``.
    """
    grid = state.u.grid
    if kappa not in (0, 1):
        raise ConfigError(f"kappa must be 0 or 1, got {kappa}")
    if kappa == 1 and grid.dim == 3:
        raise ConfigError("kappa=1 (Navier-Stokes) is only admitted for dim=2")
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = state.u
    rhs = force_faces(n, phi) - gradient_to_faces(state.P)
    if kappa:
        rhs = rhs - nonlinear_advection(u)
    if source is not None:
        rhs = rhs + source
    comps = []
    for d in range(grid.dim):
        op = _viscous.get(grid, d, dt)
        idx = [slice(None)] * grid.dim
        idx[d] = slice(1, -1)
        b = u.comps[d][tuple(idx)] + dt * rhs.comps[d][tuple(idx)]
        x, _ = pcg(op, np.ascontiguousarray(b).reshape(op.shape), x0=None, rtol=1e-13,
                   atol=1e-300, max_iter=2000, what=f"viscous solve (u{d})")
        full = np.zeros(grid.face_shape(d))
        full[tuple(idx)] = x.reshape(b.shape)
        comps.append(full)
    u_star = MacVectorField(grid, comps)
    u_new, q = project(u_star, dt, state.poisson_tol, state.poisson_max_iter, state.preconditioner)
    P = state.P.data + q.data
    P = ScalarField(grid, P - P.mean())
    return FluidState(u_new, P, state.poisson_tol, state.poisson_max_iter, state.preconditioner)
