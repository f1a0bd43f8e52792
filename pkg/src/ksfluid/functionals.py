"""Monitored functionals and the checks run on their time series."""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from .analysis import AnalysisParams, in_Ip
from .errors import AdmissibilityError, InsufficientData, SingularityError
from .grid import ScalarField, faces_inner, integrate
from .operators import DEFAULT_C_FLOOR, face_average, gradient_to_faces, vector_dirichlet_pairs

SERIES_COLUMNS = (
    "t", "dt", "mass_n", "l1_c", "min_c", "lower_envelope", "F_pr", "gronwall_envelope", "lq_c",
    "kinetic_u", "dirichlet_u", "buoyancy_power", "energy_residual", "grad_c_lq", "dissipation_pr",
    "n2", "npc_mix",
)

NONNEGATIVE = ("mass_n", "l1_c", "F_pr", "lq_c", "kinetic_u", "dirichlet_u", "dissipation_pr", "n2", "npc_mix")


@dataclass(frozen=True)
class FunctionalRecord:
    t: float
    dt: float
    mass_n: float
    l1_c: float
    min_c: float
    lower_envelope: float
    F_pr: float
    gronwall_envelope: float
    lq_c: float
    kinetic_u: float
    dirichlet_u: float
    buoyancy_power: float
    energy_residual: float
    grad_c_lq: float
    dissipation_pr: float
    n2: float
    npc_mix: float
    max_n: float = math.nan

    def row(self):
        return astuple(self)[: len(SERIES_COLUMNS)]


def column(series, name):
    return np.array([getattr(rec, name) for rec in series], dtype=float)


def kinetic_energy(u) -> float:
    return faces_inner(u.grid, u.comps, u.comps)


def dirichlet_energy(u) -> float:
    """Discrete ``int |grad u|^2``, equal to ``-<u, lap_h u>``."""
    total = 0.0
    for _, _, diff, w in vector_dirichlet_pairs(u):
        sq = diff * diff
        total += float(np.sum(sq if w is None else sq * w))
    return total * u.grid.cell_volume


def buoyancy_power(n: ScalarField, u, phi: ScalarField) -> float:
    g = gradient_to_faces(phi)
    return faces_inner(n.grid, [face_average(n, d) * u.comps[d] for d in range(n.grid.dim)], g.comps)


def _face_dirichlet(w: np.ndarray, grid) -> float:
    f = gradient_to_faces(ScalarField(grid, w))
    return faces_inner(grid, f.comps, f.comps)


def _cell_gradient_norm(c: ScalarField):
    g = gradient_to_faces(c)
    sq = 0.0
    for d in range(c.grid.dim):
        lo = [slice(None)] * c.grid.dim
        hi = [slice(None)] * c.grid.dim
        lo[d] = slice(None, -1)
        hi[d] = slice(1, None)
        gc = 0.5 * (g.comps[d][tuple(lo)] + g.comps[d][tuple(hi)])
        sq = sq + gc * gc
    return np.sqrt(sq)


def record(state, params: AnalysisParams, *, min_c0: float, F0: float | None = None,
           c_floor: float = DEFAULT_C_FLOOR) -> FunctionalRecord:
    """Evaluate every monitored functional on ``state``.

    ``F0`` is the value of ``int n^p c^-r`` at the first record; when omitted
    the current value is used (i.e. this is the first record).  Powers of n
    act on ``max(n, 0)``.
    """
    n, c = state.n, state.c
    grid = n.grid
    vol = grid.cell_volume
    cmin = float(np.min(c.data))
    if not cmin > c_floor:
        raise SingularityError(f"min c = {cmin:.3e} at or below floor {c_floor:.1e}")
    p, r, q = params.p, params.r, params.q
    npos = np.maximum(n.data, 0.0)
    F_pr = float(np.sum(npos**p * c.data**(-r))) * vol
    if F0 is None:
        F0 = F_pr
    u = state.fluid.u
    K = kinetic_energy(u)
    D = dirichlet_energy(u)
    B = buoyancy_power(n, u, state.phi)
    if state.step_index > 0 and state.dt_last > 0:
        residual = 0.5 * (K - state.prev_kinetic) / state.dt_last + D - B
    else:
        residual = 0.0
    w = npos ** (p / 2) * c.data ** (-r / 2)
    return FunctionalRecord(
        t=state.t,
        dt=state.dt_last,
        mass_n=integrate(n),
        l1_c=float(np.sum(np.abs(c.data))) * vol,
        min_c=cmin,
        lower_envelope=min_c0 * math.exp(-state.t),
        F_pr=F_pr,
        gronwall_envelope=F0 * math.exp(r * state.t),
        lq_c=float(np.sum(c.data**q)) * vol,
        kinetic_u=K,
        dirichlet_u=D,
        buoyancy_power=B,
        energy_residual=residual,
        grad_c_lq=float(np.sum(_cell_gradient_norm(c) ** q)) * vol,
        dissipation_pr=_face_dirichlet(w, grid),
        n2=float(np.sum(n.data**2)) * vol,
        npc_mix=float(np.sum(npos ** (2 * p) * c.data ** (-(p - 1)))) * vol,
        max_n=float(np.max(n.data)),
    )


class Recorder:
    """Collects records, remembering the initial values the envelopes need."""

    def __init__(self, params: AnalysisParams, c_floor=DEFAULT_C_FLOOR):
        self.params = params
        self.c_floor = c_floor
        self.series: list[FunctionalRecord] = []
        self.min_c0 = None
        self.F0 = None

    def __call__(self, state):
        if self.min_c0 is None:
            self.min_c0 = float(np.min(state.c.data))
        rec = record(state, self.params, min_c0=self.min_c0, F0=self.F0, c_floor=self.c_floor)
        if self.F0 is None:
            self.F0 = rec.F_pr
        self.series.append(rec)
        return rec


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float
    index: int | None = None
    t: float | None = None
    detail: str = ""

    def line(self):
        loc = "-" if self.index is None else f"k={self.index},t={self.t:.6g}"
        status = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return f"{self.name} {status} worst={self.worst:.6e} at={loc}{extra}"


def _argmax(values):
    k = int(np.argmax(values))
    return k, float(values[k])


def check_mass(series, rel_tol=1e-10) -> CheckReport:
    if not series:
        raise InsufficientData("empty series")
    m = column(series, "mass_n")
    t = column(series, "t")
    m0 = m[0]
    drift = np.abs(m - m0)
    scale = abs(m0)
    rel = drift / scale if scale > 0 else drift
    k, worst = _argmax(rel)
    passed = bool(np.all(drift <= rel_tol * scale))
    return CheckReport("mass", passed, worst, k, float(t[k]), f"rel_tol={rel_tol:g}")


def check_lower_bound(series, factor=0.999) -> CheckReport:
    """``min c(t_k) >= factor * (min c0) e^{-t_k}`` on every record.

    At ``t = 0`` the envelope is the datum itself, so there the factor is
    not applied and equality passes for any factor.
    """
    if not series:
        raise InsufficientData("empty series")
    mc = column(series, "min_c")
    env = column(series, "lower_envelope")
    t = column(series, "t")
    bound = np.where(t > 0, factor * env, env)
    excess = (bound - mc) / env
    k, worst = _argmax(excess)
    passed = bool(np.all(mc >= bound))
    return CheckReport("lower_bound", passed, worst, k, float(t[k]), f"factor={factor:g}")


def gronwall_excess(series):
    """Per-record ``F_pr / (F_pr(0) e^{rt}) - 1``."""
    F = column(series, "F_pr")
    env = column(series, "gronwall_envelope")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(env > 0, F / env - 1.0, np.where(F > 0, np.inf, 0.0))


def worst_gronwall_violation(series) -> float:
    """Largest positive part of the relative excess over the envelope."""
    return float(max(0.0, np.max(gronwall_excess(series))))


def check_gronwall(series, params: AnalysisParams, slack=0.05) -> CheckReport:
    if not in_Ip(params.r, params.p, params.chi):
        raise AdmissibilityError(f"r={params.r} is not in I_p for p={params.p}, chi={params.chi}")
    if not series:
        raise InsufficientData("empty series")
    F = column(series, "F_pr")
    env = column(series, "gronwall_envelope")
    t = column(series, "t")
    ex = gronwall_excess(series)
    k, worst = _argmax(ex)
    passed = bool(np.all(F <= (1.0 + slack) * env))
    return CheckReport("gronwall", passed, worst, k, float(t[k]), f"slack={slack:g} r={params.r:g}")


def check_energy_identity(series, series_half, ratio=1.5, atol=1e-14) -> CheckReport:
    """Residual of the kinetic energy balance must shrink by ``ratio`` under dt/2."""
    if len(series) < 2 or len(series_half) < 2:
        raise InsufficientData("energy identity check needs at least two records per run")
    a = float(np.max(np.abs(column(series, "energy_residual"))))
    b = float(np.max(np.abs(column(series_half, "energy_residual"))))
    if max(a, b) <= atol:
        return CheckReport("energy_identity", True, b, None, None, f"dt:{a:.3e} dt/2:{b:.3e}")
    order = math.log2(a / b) if a > 0 and b > 0 else (math.inf if b == 0 else -math.inf)
    res = np.abs(column(series_half, "energy_residual"))
    k = int(np.argmax(res))
    return CheckReport("energy_identity", b <= a / ratio, b, k, float(series_half[k].t),
                       f"dt:{a:.3e} dt/2:{b:.3e} order={order:.3f}")


def check_nonnegative(series) -> CheckReport:
    """Columns that are integrals of nonnegative quantities must stay >= 0."""
    worst, where = 0.0, None
    for k, rec in enumerate(series):
        for name in NONNEGATIVE:
            v = getattr(rec, name)
            bad = math.inf if v != v else -v
            if bad > worst:
                worst, where = bad, (k, name)
        if not rec.lower_envelope > 0:
            worst, where = math.inf, (k, "lower_envelope")
    if where is None:
        return CheckReport("nonnegativity", True, 0.0)
    k, name = where
    return CheckReport("nonnegativity", False, worst, k, series[k].t, f"column={name}")


TIME_INTEGRAL_COLUMNS = {
    "int_dissipation_pr": "dissipation_pr",
    "int_dirichlet_u": "dirichlet_u",
    "int_n2": "n2",
    "int_npc_mix": "npc_mix",
}


def _trapezoid(y, x):
    if len(x) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def time_integrals(series) -> dict:
    t = column(series, "t")
    return {key: _trapezoid(column(series, col), t) for key, col in TIME_INTEGRAL_COLUMNS.items()}

