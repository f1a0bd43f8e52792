"""Preconditioned conjugate gradients for ``alpha*x - beta*lap_h(x) = b``.

Operators act on 3-D arrays (2-D problems use a trailing axis of length 1).
Each side of each axis is closed by a ghost rule ``ghost = s * edge``:

* ``s = +1``  homogeneous Neumann (mirror), used for scalars and pressure
* ``s = -1``  no-slip wall half a cell away (tangential velocity)
* ``s =  0``  no-slip wall on the neighbouring node (normal velocity)
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import SolverDivergence

MIRROR, HALF_WALL, NODE_WALL = 1.0, -1.0, 0.0


def as3d(a):
    return a.reshape(a.shape + (1,) * (3 - a.ndim))


class StencilOperator:
    def __init__(self, shape, h, alpha, beta, s_lo=None, s_hi=None):
        self.shape = tuple(shape) + (1,) * (3 - len(shape))
        self.dim = len(shape)
        self.h = tuple(h)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.s_lo = tuple(s_lo) if s_lo is not None else (MIRROR,) * self.dim
        self.s_hi = tuple(s_hi) if s_hi is not None else (MIRROR,) * self.dim
        self.ih2 = tuple(1.0 / hh**2 for hh in self.h) + (0.0,) * (3 - self.dim)
        diag = np.full(self.shape, self.alpha)
        for d in range(self.dim):
            w = np.full(self.shape[d], 2.0)
            w[0] -= self.s_lo[d]
            w[-1] -= self.s_hi[d]
            view = [1, 1, 1]
            view[d] = -1
            diag = diag + self.beta * self.ih2[d] * w.reshape(view)
        self.diag = np.ascontiguousarray(diag)
        self.inv_diag = 1.0 / self.diag

    @property
    def singular(self):
        return self.alpha == 0.0 and all(s == MIRROR for s in self.s_lo + self.s_hi)

    def apply(self, x):
        return kernels.active.stencil_apply(x, self.diag, self.beta, self.ih2)

    def smooth(self, x, b, sweeps=1, reverse=False):
        order = (1, 0) if reverse else (0, 1)
        for _ in range(sweeps):
            for color in order:
                kernels.active.rbgs_sweep(x, b, self.diag, self.beta, self.ih2, color)

    def coarsen(self):
        """Rediscretised operator on the grid with twice the spacing, or None."""
        if self.dim and all(self.shape[d] % 2 == 0 and self.shape[d] >= 4 for d in range(self.dim)):
            shape = tuple(self.shape[d] // 2 for d in range(self.dim))
            h = tuple(2 * hh for hh in self.h)
            return StencilOperator(shape, h, self.alpha, self.beta, self.s_lo, self.s_hi)
        return None

    def dense(self):
        n = int(np.prod(self.shape))
        eye = np.eye(n)
        return np.stack([self.apply(eye[i].reshape(self.shape)).ravel() for i in range(n)], axis=1)


# cell-centred linear interpolation and its transpose (mirror at the ends)

def _prolong_axis(c, axis):
    width = [(0, 0)] * 3
    width[axis] = (1, 1)
    p = np.pad(c, width, mode="edge")
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(None, -2)
    hi[axis] = slice(2, None)
    even = 0.75 * c + 0.25 * p[tuple(lo)]
    odd = 0.75 * c + 0.25 * p[tuple(hi)]
    out = np.stack([even, odd], axis=axis + 1)
    shape = list(c.shape)
    shape[axis] *= 2
    return out.reshape(shape)


def _restrict_axis(f, axis):
    width = [(0, 0)] * 3
    width[axis] = (1, 1)
    p = np.pad(f, width, mode="edge")
    n = f.shape[axis]

    def take(start):
        idx = [slice(None)] * 3
        idx[axis] = slice(start, start + n, 2)
        return p[tuple(idx)]

    # coarse i collects fine 2i, 2i+1 (weight 3/4) and 2i-1, 2i+2 (weight 1/4)
    out = 0.75 * (take(1) + take(2)) + 0.25 * (take(0) + take(3))
    return 0.5 * out


class Multigrid:
    """Symmetric V-cycle used as a CG preconditioner."""

    def __init__(self, op: StencilOperator, sweeps=2, coarse_max=4096):
        self.levels = [op]
        while True:
            nxt = self.levels[-1].coarsen()
            if nxt is None:
                break
            self.levels.append(nxt)
            if int(np.prod(nxt.shape)) <= 64:
                break
        self.sweeps = sweeps
        coarse = self.levels[-1]
        n = int(np.prod(coarse.shape))
        self._coarse_inv = np.linalg.pinv(coarse.dense()) if n <= coarse_max else None

    def _axes(self, level):
        return range(self.levels[level].dim)

    def _vcycle(self, level, b):
        op = self.levels[level]
        if level == len(self.levels) - 1:
            if self._coarse_inv is not None:
                return (self._coarse_inv @ b.ravel()).reshape(op.shape)
            x = np.zeros(op.shape)
            op.smooth(x, b, sweeps=20)
            op.smooth(x, b, sweeps=20, reverse=True)
            return x
        x = np.zeros(op.shape)
        op.smooth(x, b, self.sweeps)
        r = b - op.apply(x)
        for d in self._axes(level):
            r = _restrict_axis(r, d)
        e = self._vcycle(level + 1, np.ascontiguousarray(r))
        for d in self._axes(level):
            e = _prolong_axis(e, d)
        x += e
        op.smooth(x, b, self.sweeps, reverse=True)
        return x

    def __call__(self, r):
        return self._vcycle(0, np.ascontiguousarray(r))


def make_preconditioner(op: StencilOperator, kind: str):
    if kind == "diagonal":
        inv = op.inv_diag
        return lambda r: inv * r
    if kind == "multigrid":
        return Multigrid(op)
    raise ValueError(f"unknown preconditioner {kind!r}")


def pcg(op: StencilOperator, b, x0=None, precond=None, atol=0.0, rtol=1e-12, max_iter=1000,
        what="linear solve"):
    """Solve ``op x = b`` to ``max|r| <= max(atol, rtol*max|b|)``.

    Singular (pure Neumann) operators are handled on the zero-mean subspace;
    ``b`` must then be compatible, which the caller ensures by subtracting its
    mean.  Returns ``(x, iterations)``.
    """
    singular = op.singular
    if precond is None:
        precond = make_preconditioner(op, "diagonal")
    b = np.ascontiguousarray(b, dtype=float)
    x = np.zeros(op.shape) if x0 is None else np.array(x0, dtype=float, copy=True)
    r = b - op.apply(x)
    if singular:
        r -= r.mean()
    target = max(atol, rtol * float(np.max(np.abs(b))))
    if float(np.max(np.abs(r))) <= target:
        return x, 0
    z = precond(r)
    if singular:
        z -= z.mean()
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, max_iter + 1):
        q = op.apply(p)
        pq = float(np.vdot(p, q))
        if not pq > 0.0:
            break
        a = rz / pq
        x += a * p
        r -= a * q
        if singular:
            r -= r.mean()
        if float(np.max(np.abs(r))) <= target:
            return x, it
        z = precond(r)
        if singular:
            z -= z.mean()
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    # recompute the true residual before giving up
    r = b - op.apply(x)
    if singular:
        r -= r.mean()
    if float(np.max(np.abs(r))) <= target:
        return x, max_iter
    raise SolverDivergence(
        f"{what}: residual {np.max(np.abs(r)):.3e} above {target:.3e} after {max_iter} iterations"
    )


def solve_conservative(op: StencilOperator, b, precond=None, rtol=1e-13, max_iter=1000, what="diffusion solve"):
    """Mirror-closed Helmholtz solve with the total of ``alpha*x`` matched to ``sum(b)``.

    For Neumann closure ``sum(op x) == alpha * sum(x)``, so a constant shift
    removes the residual's mean and conserves mass to round-off.
    """
    x, it = pcg(op, b, precond=precond, rtol=rtol, max_iter=max_iter, what=what)
    x += (np.sum(b) - op.alpha * np.sum(x)) / (op.alpha * x.size)
    return x, it
