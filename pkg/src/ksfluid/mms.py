"""Manufactured smooth solution with matching source terms.

The exact fields are

    n = 1 + tau(t)/2 cos(pi x/Lx) cos(pi y/Ly) [cos(pi z/Lz)]
    c = 2 + tau(t)/2 cos(pi x/Lx) cos(2 pi y/Ly) [cos(pi z/Lz)]
    u = w(z) (d_y psi, -d_x psi[, 0]),  psi = A tau(t) sin^2(pi x/Lx) sin^2(pi y/Ly)

with ``tau = exp(-TIME_RATE t)``, ``w = sin^2(pi z/Lz)`` in 3-D (1 in 2-D) and zero
pressure.  They satisfy the zero-flux and no-slip conditions; the velocity is
sampled through node values of ``psi`` so that it is discretely
divergence free.  The sources are derived symbolically with sympy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import sympy as sp

from .grid import MacVectorField, ScalarField, faces_inner

PSI_AMPLITUDE = 0.2
# fast enough that time errors dominate at moderate resolution
TIME_RATE = 4.0


@dataclass
class Sources:
    n: np.ndarray
    c: np.ndarray
    u: MacVectorField


class ManufacturedSolution:
    def __init__(self, cfg):
        self.cfg = cfg
        grid = cfg.grid
        self.grid = grid
        dim = grid.dim
        X = sp.symbols("x y z")[:dim]
        t = sp.Symbol("t")
        L = grid.extent
        tau = sp.exp(-TIME_RATE * t)
        k = [sp.pi / sp.Float(Li) for Li in L]
        zfac_n = sp.cos(k[2] * X[2]) if dim == 3 else 1
        w = sp.sin(k[2] * X[2]) ** 2 if dim == 3 else 1
        n = 1 + tau / 2 * sp.cos(k[0] * X[0]) * sp.cos(k[1] * X[1]) * zfac_n
        c = 2 + tau / 2 * sp.cos(k[0] * X[0]) * sp.cos(2 * k[1] * X[1]) * zfac_n
        psi = PSI_AMPLITUDE * tau * sp.sin(k[0] * X[0]) ** 2 * sp.sin(k[1] * X[1]) ** 2
        u = [sp.diff(psi, X[1]) * w, -sp.diff(psi, X[0]) * w] + ([sp.Integer(0)] if dim == 3 else [])
        grad_phi = [sp.Float(g) for g in cfg.phi.gradient]
        chi, kappa = cfg.chi, cfg.kappa

        def lap(f):
            return sum(sp.diff(f, xi, 2) for xi in X)

        def adv(f):
            return sum(ui * sp.diff(f, xi) for ui, xi in zip(u, X))

        f_n = sp.diff(n, t) + adv(n) - lap(n) + chi * sum(sp.diff(n * sp.diff(c, xi) / c, xi) for xi in X)
        f_c = sp.diff(c, t) + adv(c) - lap(c) + c - n
        f_u = [sp.diff(ud, t) + kappa * adv(ud) - lap(ud) - n * gd for ud, gd in zip(u, grad_phi)]

        args = (*X, t)
        fn = lambda e: sp.lambdify(args, e, "numpy")
        self._n, self._c, self._psi, self._w = fn(n), fn(c), fn(psi), fn(w)
        self._fn, self._fc = fn(f_n), fn(f_c)
        self._fu = [fn(e) for e in f_u]

    @staticmethod
    def _eval(f, coords, t, shape):
        return np.broadcast_to(np.asarray(f(*coords, t), dtype=float), shape).copy()

    def velocity(self, t) -> MacVectorField:
        """Exact velocity sampled as discrete curl of node values of psi."""
        grid = self.grid
        h = grid.h
        xn, yn = grid.nodes(0), grid.nodes(1)
        # u_x on x-faces: difference of psi along y
        Xn, Yn = np.meshgrid(xn, yn, indexing="ij")
        psi_nodes = self._eval(self._psi, (Xn, Yn) + ((0.0,) if grid.dim == 3 else ()), t, Xn.shape)
        ux = (psi_nodes[:, 1:] - psi_nodes[:, :-1]) / h[1]
        uy = -(psi_nodes[1:, :] - psi_nodes[:-1, :]) / h[0]
        if grid.dim == 2:
            return MacVectorField(grid, [ux, uy])
        zc = grid.centers(2)
        wz = self._eval(self._w, (0.0, 0.0, zc), t, zc.shape)
        # psi does not depend on z, so evaluating it at z=0 above is exact
        comps = [ux[:, :, None] * wz, uy[:, :, None] * wz, np.zeros(grid.face_shape(2))]
        return MacVectorField(grid, comps)

    def exact(self, t):
        grid = self.grid
        coords = grid.cell_coords()
        n = ScalarField(grid, self._eval(self._n, coords, t, grid.cells))
        c = ScalarField(grid, self._eval(self._c, coords, t, grid.cells))
        return n, c, self.velocity(t)

    def sources(self, t) -> Sources:
        grid = self.grid
        coords = grid.cell_coords()
        fu = [self._eval(f, grid.face_coords(d), t, grid.face_shape(d)) for d, f in enumerate(self._fu)]
        return Sources(self._eval(self._fn, coords, t, grid.cells), self._eval(self._fc, coords, t, grid.cells),
                       MacVectorField(grid, fu))

    def errors(self, state) -> dict:
        """Discrete L2 errors of ``n``, ``c`` and ``u`` against the exact solution."""
        n, c, u = self.exact(state.t)
        vol = self.grid.cell_volume
        du = [a - b for a, b in zip(state.fluid.u.comps, u.comps)]
        return {
            "n": math.sqrt(float(np.sum((state.n.data - n.data) ** 2)) * vol),
            "c": math.sqrt(float(np.sum((state.c.data - c.data) ** 2)) * vol),
            "u": math.sqrt(faces_inner(self.grid, du, du)),
        }


def run_fixed_dt(cfg, dt, T=None):
    """Integrate the manufactured problem with a fixed step; returns (state, errors)."""
    from .config import build_initial_state
    from .stepper import step

    if not cfg.mms.enabled:
        raise ValueError("config has no manufactured solution enabled")
    T = cfg.T_end if T is None else T
    mms = ManufacturedSolution(cfg)
    state = build_initial_state(cfg)
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    for _ in range(nsteps):
        state = step(state, cfg.control, cfg, dt, mms)
    return state, mms.errors(state)


def observed_orders(errors, ratio=2.0):
    """``log(e_k / e_{k+1}) / log(ratio)`` for consecutive levels."""
    return [math.log(a / b) / math.log(ratio) for a, b in zip(errors[:-1], errors[1:])]


def spatial_study(cfg, cells=(32, 64, 128), dt_factor=0.25, T=0.05):
    """Errors on refined grids with ``dt = dt_factor * h^2``."""
    from .grid import GridSpec

    out = []
    for m in cells:
        grid = GridSpec(cfg.grid.dim, cfg.grid.extent, (m,) * cfg.grid.dim)
        sub = replace(cfg, grid=grid)
        _, err = run_fixed_dt(sub, dt_factor * grid.h_min**2, T)
        out.append(err)
    return out


def temporal_study(cfg, steps=(10, 20), T=None):
    """Errors on the configured grid for ``T/steps`` time steps."""
    T = cfg.T_end if T is None else T
    return [run_fixed_dt(cfg, T / s, T)[1] for s in steps]
