"""Pure numpy implementations of the hot kernels.

Every function mirrors ``_ckernels.pyx`` operation by operation so that both
backends round identically.  Arrays are 3-D; 2-D problems carry a trailing
axis of length one with a zero stencil weight.
"""
import numpy as np

NAME = "python"


def _neighbour_sum(x, ih2):
    xp = np.pad(x, 1)
    nb = (xp[2:, 1:-1, 1:-1] + xp[:-2, 1:-1, 1:-1]) * ih2[0]
    nb = nb + (xp[1:-1, 2:, 1:-1] + xp[1:-1, :-2, 1:-1]) * ih2[1]
    nb = nb + (xp[1:-1, 1:-1, 2:] + xp[1:-1, 1:-1, :-2]) * ih2[2]
    return nb


def stencil_apply(x, diag, beta, ih2):
    """``diag*x - beta * sum(neighbours * ih2)`` with zero beyond the array."""
    return diag * x - beta * _neighbour_sum(x, ih2)


def rbgs_sweep(x, b, diag, beta, ih2, color):
    """One red-black Gauss-Seidel half sweep, in place."""
    nb = _neighbour_sum(x, ih2)
    new = (b + beta * nb) / diag
    i, j, k = np.indices(x.shape, sparse=True)
    mask = (i + j + k) % 2 == color
    np.copyto(x, new, where=mask)


def chemotactic_flux(n, c, inv_h, chi, harmonic, upwind):
    """Face flux ``chi * n_face * grad(c)/c_face`` along axis 1.

    ``n`` and ``c`` have shape (A, L+2, B) (one ghost layer along axis 1);
    the result has shape (A, L+1, B).  Returns (flux, min c_face).
    """
    cw = c[:, :-1, :]
    ce = c[:, 1:, :]
    if harmonic:
        cf = 2.0 * cw * ce / (cw + ce)
    else:
        cf = 0.5 * (cw + ce)
    g = (ce - cw) * inv_h / cf
    if upwind:
        nf = np.where(g > 0.0, n[:, :-1, :], n[:, 1:, :])
    else:
        nf = 0.5 * (n[:, :-1, :] + n[:, 1:, :])
    return chi * nf * g, float(cf.min())


def advective_flux(f, u, upwind):
    """Face flux ``u * f_face`` along axis 1; shapes as in chemotactic_flux."""
    if upwind:
        ff = np.where(u > 0.0, f[:, :-1, :], f[:, 1:, :])
    else:
        ff = 0.5 * (f[:, :-1, :] + f[:, 1:, :])
    return u * ff
