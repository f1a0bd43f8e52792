"""Structured rectangular grids, cell-centred scalars and MAC velocity fields.

Scalars live at cell centres and are stored as C-ordered numpy arrays whose
shape equals ``grid.cells``.  Velocity component ``d`` lives on the faces
normal to axis ``d``; its array has ``cells[d] + 1`` entries along that axis
and the first/last of them are the wall faces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NEUMANN = "neumann"
PERIODIC = "periodic"


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: tuple
    cells: tuple

    def __post_init__(self):
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        object.__setattr__(self, "cells", tuple(int(c) for c in self.cells))
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.extent) != self.dim or len(self.cells) != self.dim:
            raise ValueError("extent and cells need one entry per axis")
        if any(c < 4 for c in self.cells):
            raise ValueError("at least 4 cells per axis are required")
        if any(not e > 0 for e in self.extent):
            raise ValueError("extent must be positive")

    @classmethod
    def square(cls, n, dim=2, length=1.0):
        return cls(dim, (length,) * dim, (n,) * dim)

    @property
    def h(self):
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def h_min(self):
        return min(self.h)

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    @property
    def volume(self):
        return float(np.prod(self.extent))

    @property
    def size(self):
        return int(np.prod(self.cells))

    def centers(self, axis):
        h = self.h[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def nodes(self, axis):
        return np.arange(self.cells[axis] + 1) * self.h[axis]

    def face_shape(self, d):
        shape = list(self.cells)
        shape[d] += 1
        return tuple(shape)

    def cell_coords(self):
        """Coordinate arrays of the cell centres (``indexing='ij'``)."""
        return np.meshgrid(*[self.centers(a) for a in range(self.dim)], indexing="ij")

    def face_coords(self, d):
        """Coordinate arrays of the faces normal to axis ``d``."""
        axes = [self.nodes(a) if a == d else self.centers(a) for a in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")


def pad_axis(a, axis, mode):
    """Add one ghost layer to ``a`` along ``axis`` only."""
    width = [(0, 0)] * a.ndim
    width[axis] = (1, 1)
    if mode == NEUMANN:
        return np.pad(a, width, mode="edge")
    if mode == PERIODIC:
        return np.pad(a, width, mode="wrap")
    raise ValueError(f"unknown boundary condition {mode!r}")


@dataclass
class ScalarField:
    grid: GridSpec
    data: np.ndarray = None
    bc: str = NEUMANN

    def __post_init__(self):
        if self.data is None:
            self.data = np.zeros(self.grid.cells)
        else:
            self.data = np.ascontiguousarray(self.data, dtype=float).reshape(self.grid.cells)
        if self.bc not in (NEUMANN, PERIODIC):
            raise ValueError(f"unknown boundary condition {self.bc!r}")

    @classmethod
    def constant(cls, grid, value, bc=NEUMANN):
        return cls(grid, np.full(grid.cells, float(value)), bc)

    @classmethod
    def from_function(cls, grid, fn, bc=NEUMANN):
        return cls(grid, np.broadcast_to(fn(*grid.cell_coords()), grid.cells), bc)

    def copy(self):
        return ScalarField(self.grid, self.data.copy(), self.bc)

    def padded(self):
        """Data with one ghost layer on every side, closed by ``bc``.

        Neumann closure mirrors the adjacent interior value, so every
        boundary-normal difference vanishes exactly.
        """
        mode = "edge" if self.bc == NEUMANN else "wrap"
        return np.pad(self.data, 1, mode=mode)

    def padded_along(self, axis):
        return pad_axis(self.data, axis, self.bc)

    def with_data(self, data):
        return ScalarField(self.grid, data, self.bc)

    def __add__(self, other):
        return self.with_data(self.data + _raw(other))

    def __sub__(self, other):
        return self.with_data(self.data - _raw(other))

    def __mul__(self, other):
        return self.with_data(self.data * _raw(other))

    __rmul__ = __mul__


def _raw(x):
    return x.data if isinstance(x, ScalarField) else x


@dataclass
class FaceField:
    """One array per axis, located on the faces normal to that axis."""

    grid: GridSpec
    comps: list = field(default=None)

    def __post_init__(self):
        if self.comps is None:
            self.comps = [np.zeros(self.grid.face_shape(d)) for d in range(self.grid.dim)]
        else:
            self.comps = [
                np.ascontiguousarray(c, dtype=float).reshape(self.grid.face_shape(d))
                for d, c in enumerate(self.comps)
            ]

    def copy(self):
        return type(self)(self.grid, [c.copy() for c in self.comps])

    def max_abs(self):
        return max(float(np.max(np.abs(c))) for c in self.comps)

    def _combine(self, other, op):
        if isinstance(other, FaceField):
            return type(self)(self.grid, [op(a, b) for a, b in zip(self.comps, other.comps)])
        return type(self)(self.grid, [op(a, other) for a in self.comps])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def boundary_values(self, d):
        """The two wall slabs of component ``d``."""
        c = self.comps[d]
        return np.take(c, 0, axis=d), np.take(c, -1, axis=d)


class FluxField(FaceField):
    pass


class MacVectorField(FaceField):
    """Staggered velocity with no-slip walls.

    Wall-normal faces are pinned to zero; the tangential ghost closure is
    ``ghost = -interior`` so the wall value interpolates to zero.
    """

    def __post_init__(self):
        super().__post_init__()
        self.enforce_bc()

    def enforce_bc(self):
        for d, c in enumerate(self.comps):
            idx = [slice(None)] * c.ndim
            idx[d] = 0
            c[tuple(idx)] = 0.0
            idx[d] = -1
            c[tuple(idx)] = 0.0
        return self

    def interior(self, d):
        """View of component ``d`` without its two wall slabs."""
        idx = [slice(None)] * self.grid.dim
        idx[d] = slice(1, -1)
        return self.comps[d][tuple(idx)]

    def padded_tangential(self, d, axis):
        """Component ``d`` with a no-slip ghost layer along ``axis != d``."""
        width = [(0, 0)] * self.grid.dim
        width[axis] = (1, 1)
        p = np.pad(self.comps[d], width, mode="edge")
        lo = [slice(None)] * self.grid.dim
        lo[axis] = 0
        p[tuple(lo)] *= -1.0
        lo[axis] = -1
        p[tuple(lo)] *= -1.0
        return p


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature of a cell-centred field."""
    return float(np.sum(f.data)) * f.grid.cell_volume


def min_value(f: ScalarField) -> float:
    return float(np.min(f.data))


def max_value(f: ScalarField) -> float:
    return float(np.max(f.data))


def faces_inner(grid: GridSpec, a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    """Discrete L2 inner product of two face fields."""
    return float(sum(np.sum(x * y) for x, y in zip(a, b))) * grid.cell_volume
