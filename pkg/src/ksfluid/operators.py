"""Discrete differential operators on the staggered grid.

Fluxes are assembled per axis on arrays that carry a ghost layer only along
that axis; the face loops themselves run in :mod:`ksfluid.kernels`.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import SingularityError
from .grid import FluxField, MacVectorField, ScalarField, pad_axis

DEFAULT_C_FLOOR = 1e-12


def _as3(a, axis):
    """Reshape a C-contiguous array to (outer, len(axis), inner)."""
    s = a.shape
    outer = int(np.prod(s[:axis], dtype=np.int64))
    inner = int(np.prod(s[axis + 1:], dtype=np.int64))
    return np.ascontiguousarray(a).reshape(outer, s[axis], inner)


def gradient_to_faces(f: ScalarField) -> FluxField:
    grid = f.grid
    comps = []
    for d in range(grid.dim):
        p = f.padded_along(d)
        comps.append(np.diff(p, axis=d) / grid.h[d])
    return FluxField(grid, comps)


def divergence(F) -> ScalarField:
    grid = F.grid
    out = np.diff(F.comps[0], axis=0) / grid.h[0]
    for d in range(1, grid.dim):
        out = out + np.diff(F.comps[d], axis=d) / grid.h[d]
    return ScalarField(grid, out)


def laplacian(f: ScalarField) -> ScalarField:
    """Standard (2*dim+1)-point Laplacian, written as div(grad f)."""
    out = divergence(gradient_to_faces(f))
    out.bc = f.bc
    return out


def advective_flux(f: ScalarField, u: MacVectorField, scheme: str = "upwind") -> FluxField:
    if scheme not in ("upwind", "central"):
        raise ValueError(f"unknown advection scheme {scheme!r}")
    k = kernels.active
    grid = f.grid
    comps = []
    for d in range(grid.dim):
        fp = _as3(f.padded_along(d), d)
        ud = _as3(u.comps[d], d)
        comps.append(k.advective_flux(fp, ud, scheme == "upwind").reshape(grid.face_shape(d)))
    return FluxField(grid, comps)


def chemotactic_flux(n: ScalarField, c: ScalarField, chi: float, c_face: str = "harmonic",
                     n_face: str = "upwind", c_floor: float = DEFAULT_C_FLOOR) -> FluxField:
    """Face flux of ``chi * n * grad(c) / c``.

    ``c_face`` selects the harmonic or arithmetic mean of the two neighbours,
    ``n_face`` upwinds ``n`` by the sign of the face drift or averages it.
    """
    if c_face not in ("harmonic", "arithmetic"):
        raise ValueError(f"unknown c_face interpolation {c_face!r}")
    if n_face not in ("upwind", "central"):
        raise ValueError(f"unknown n_face interpolation {n_face!r}")
    k = kernels.active
    grid = n.grid
    comps = []
    for d in range(grid.dim):
        n3 = _as3(n.padded_along(d), d)
        c3 = _as3(c.padded_along(d), d)
        flux, cmin = k.chemotactic_flux(n3, c3, 1.0 / grid.h[d], float(chi),
                                        c_face == "harmonic", n_face == "upwind")
        if not cmin > c_floor:
            raise SingularityError(f"face value of c ({cmin:.3e}) at or below floor {c_floor:.1e}")
        comps.append(flux.reshape(grid.face_shape(d)))
    return FluxField(grid, comps)


def chemotactic_drift(c: ScalarField, c_face: str = "harmonic"):
    """Per-axis face arrays of ``grad(c)/c_face`` (used by the time step control)."""
    grid = c.grid
    out = []
    for d in range(grid.dim):
        p = c.padded_along(d)
        cw = np.delete(p, -1, axis=d)
        ce = np.delete(p, 0, axis=d)
        cf = 2.0 * cw * ce / (cw + ce) if c_face == "harmonic" else 0.5 * (cw + ce)
        out.append((ce - cw) / grid.h[d] / cf)
    return out


def face_average(f: ScalarField, d: int):
    """Arithmetic mean of the two cells adjacent to each face normal to ``d``."""
    p = f.padded_along(d)
    return 0.5 * (np.delete(p, -1, axis=d) + np.delete(p, 0, axis=d))


def _avg(a, axis):
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (a[tuple(lo)] + a[tuple(hi)])


def _trim(a, axis):
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(1, -1)
    return a[tuple(idx)]


def nonlinear_advection(u: MacVectorField) -> MacVectorField:
    """Conservative central discretisation of ``(u . grad) u``.

    Component ``d`` is evaluated at the interior faces normal to ``d``; wall
    faces of the result are zero.
    """
    grid = u.grid
    h = grid.h
    out = []
    for d in range(grid.dim):
        # normal part: d/dx_d (u_d u_d) with the product at cell centres
        ud_c = _avg(u.comps[d], d)
        acc = np.diff(ud_c * ud_c, axis=d) / h[d]
        for e in range(grid.dim):
            if e == d:
                continue
            # cross part: d/dx_e (u_e u_d) with the product on edges
            ue_edge = _avg(u.comps[e], d)
            ud_edge = _trim(_avg(u.padded_tangential(d, e), e), d)
            acc = acc + np.diff(ue_edge * ud_edge, axis=e) / h[e]
        full = np.zeros(grid.face_shape(d))
        idx = [slice(None)] * grid.dim
        idx[d] = slice(1, -1)
        full[tuple(idx)] = acc
        out.append(full)
    return MacVectorField(grid, out)


def vector_dirichlet_pairs(u: MacVectorField):
    """Yield (component, axis, differences, weights) for the viscous energy.

    Wall pairs that involve the mirrored tangential ghost get weight 1/2,
    which makes the sum equal to ``-<u, lap_h u>`` exactly.
    """
    grid = u.grid
    for d in range(grid.dim):
        for e in range(grid.dim):
            if e == d:
                diff = np.diff(u.comps[d], axis=d) / grid.h[d]
                yield d, e, diff, None
            else:
                p = u.padded_tangential(d, e)
                diff = np.diff(p, axis=e) / grid.h[e]
                w = np.ones(diff.shape[e])
                w[0] = w[-1] = 0.5
                shape = [1] * grid.dim
                shape[e] = -1
                yield d, e, diff, w.reshape(shape)


__all__ = [
    "advective_flux",
    "chemotactic_flux",
    "chemotactic_drift",
    "divergence",
    "face_average",
    "gradient_to_faces",
    "laplacian",
    "nonlinear_advection",
    "pad_axis",
]
