# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``.

Keep the floating point operation order identical to the numpy code.
"""
import numpy as np

NAME = "compiled"


cdef inline double _nb(const double[:, :, ::1] x, Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                       double ih0, double ih1, double ih2) nogil:
    cdef Py_ssize_t n0 = x.shape[0], n1 = x.shape[1], n2 = x.shape[2]
    cdef double a, b, nb
    a = x[i + 1, j, k] if i + 1 < n0 else 0.0
    b = x[i - 1, j, k] if i > 0 else 0.0
    nb = (a + b) * ih0
    a = x[i, j + 1, k] if j + 1 < n1 else 0.0
    b = x[i, j - 1, k] if j > 0 else 0.0
    nb = nb + (a + b) * ih1
    a = x[i, j, k + 1] if k + 1 < n2 else 0.0
    b = x[i, j, k - 1] if k > 0 else 0.0
    nb = nb + (a + b) * ih2
    return nb


def stencil_apply(const double[:, :, ::1] x, const double[:, :, ::1] diag, double beta, ih2):
    cdef double ih0 = ih2[0], ih1 = ih2[1], ihz = ih2[2]
    cdef Py_ssize_t i, j, k
    out_arr = np.empty((x.shape[0], x.shape[1], x.shape[2]))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i in range(x.shape[0]):
            for j in range(x.shape[1]):
                for k in range(x.shape[2]):
                    out[i, j, k] = diag[i, j, k] * x[i, j, k] - beta * _nb(x, i, j, k, ih0, ih1, ihz)
    return out_arr


def rbgs_sweep(double[:, :, ::1] x, const double[:, :, ::1] b, const double[:, :, ::1] diag,
               double beta, ih2, int color):
    cdef double ih0 = ih2[0], ih1 = ih2[1], ihz = ih2[2]
    cdef Py_ssize_t i, j, k, k0
    with nogil:
        for i in range(x.shape[0]):
            for j in range(x.shape[1]):
                k0 = (color + i + j) % 2
                for k in range(k0, x.shape[2], 2):
                    x[i, j, k] = (b[i, j, k] + beta * _nb(x, i, j, k, ih0, ih1, ihz)) / diag[i, j, k]


def chemotactic_flux(const double[:, :, ::1] n, const double[:, :, ::1] c, double inv_h,
                     double chi, bint harmonic, bint upwind):
    cdef Py_ssize_t A = c.shape[0], L = c.shape[1] - 1, B = c.shape[2]
    cdef Py_ssize_t a, i, b
    cdef double cw, ce, cf, g, nf, cmin = np.inf
    cdef bint saw_nan = False
    out_arr = np.empty((A, L, B))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for a in range(A):
            for i in range(L):
                for b in range(B):
                    cw = c[a, i, b]
                    ce = c[a, i + 1, b]
                    if harmonic:
                        cf = 2.0 * cw * ce / (cw + ce)
                    else:
                        cf = 0.5 * (cw + ce)
                    if cf != cf:
                        saw_nan = True
                    elif cf < cmin:
                        cmin = cf
                    g = (ce - cw) * inv_h / cf
                    if upwind:
                        nf = n[a, i, b] if g > 0.0 else n[a, i + 1, b]
                    else:
                        nf = 0.5 * (n[a, i, b] + n[a, i + 1, b])
                    out[a, i, b] = chi * nf * g
    return out_arr, (np.nan if saw_nan else cmin)


def advective_flux(const double[:, :, ::1] f, const double[:, :, ::1] u, bint upwind):
    cdef Py_ssize_t A = u.shape[0], L = u.shape[1], B = u.shape[2]
    cdef Py_ssize_t a, i, b
    cdef double ff, v
    out_arr = np.empty((A, L, B))
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for a in range(A):
            for i in range(L):
                for b in range(B):
                    v = u[a, i, b]
                    if upwind:
                        ff = f[a, i, b] if v > 0.0 else f[a, i + 1, b]
                    else:
                        ff = 0.5 * (f[a, i, b] + f[a, i + 1, b])
                    out[a, i, b] = v * ff
    return out_arr
