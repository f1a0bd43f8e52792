"""Coupled time stepping: fluid, then signal, then cells.

Transport and the chemotactic flux are explicit (upwind by default), all
diffusion is backward Euler.  The signal equation treats ``(lap - 1)``
implicitly, which keeps ``min c`` above ``(min c0) / prod(1 + dt_j)``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import (BlowupDetected, NonFinite, PositivityViolation, SingularityDetected, SingularityError,
                     SolverDivergence, TimestepCollapse)
from .fluid import FluidState, fluid_step
from .functionals import Recorder, kinetic_energy
from .grid import ScalarField
from .operators import advective_flux, chemotactic_drift, chemotactic_flux, divergence
from .solvers import StencilOperator, solve_conservative

log = logging.getLogger(__name__)

EPS_GUARD = 1e-12


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.4
    dt_min: float = 1e-8
    dt_max: float = 1e-2
    n_cap: float = 1e8
    c_floor: float = 1e-12
    positivity_tol: float = 1e-13
    poisson_tol: float = 1e-10
    poisson_max_iter: int = 500

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if not self.n_cap > 0 or not self.c_floor > 0:
            raise ValueError("n_cap and c_floor must be positive")
        if self.positivity_tol < 0:
            raise ValueError("positivity_tol must be nonnegative")

    def halved(self):
        """Same control with every time step bound halved."""
        return replace(self, cfl=self.cfl / 2, dt_min=self.dt_min / 2, dt_max=self.dt_max / 2)


@dataclass
class SimState:
    t: float
    n: ScalarField
    c: ScalarField
    fluid: FluidState
    phi: ScalarField
    step_index: int = 0
    dt_last: float = 0.0
    prev_kinetic: float = 0.0

    def copy(self):
        return SimState(self.t, self.n.copy(), self.c.copy(), self.fluid.copy(), self.phi,
                        self.step_index, self.dt_last, self.prev_kinetic)


class Status(str, Enum):
    COMPLETED = "Completed"
    BLOWUP = "BlowupDetected"
    SINGULARITY = "SingularityDetected"
    TIMESTEP_COLLAPSE = "TimestepCollapse"
    SOLVER_DIVERGENCE = "SolverDivergence"
    POSITIVITY = "PositivityViolation"
    NONFINITE = "NonFinite"

    def __str__(self):
        return self.value


_STATUS_OF = {
    BlowupDetected: Status.BLOWUP,
    SingularityError: Status.SINGULARITY,
    TimestepCollapse: Status.TIMESTEP_COLLAPSE,
    SolverDivergence: Status.SOLVER_DIVERGENCE,
    PositivityViolation: Status.POSITIVITY,
    NonFinite: Status.NONFINITE,
}


@dataclass
class RunResult:
    state: SimState
    series: list
    status: Status
    message: str = ""
    steps: int = 0
    sup_n: float = math.nan
    initial_max_n: float = math.nan


def _outflow_rate(u, drift, chi, grid, upwind_n):
    """Largest per-cell outflow rate of the explicit n/c update (1/time)."""
    rate = np.zeros(grid.cells)
    for d in range(grid.dim):
        # advective outflow: u>0 leaves through the high face, u<0 through the low one
        ud = u.comps[d]
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[d] = slice(None, -1)
        hi[d] = slice(1, None)
        out = np.maximum(ud[tuple(hi)], 0.0) + np.maximum(-ud[tuple(lo)], 0.0)
        if upwind_n:
            g = chi * drift[d]
            out = out + np.maximum(g[tuple(hi)], 0.0) + np.maximum(-g[tuple(lo)], 0.0)
        else:
            g = chi * np.abs(drift[d])
            out = out + 0.5 * (g[tuple(hi)] + g[tuple(lo)])
        rate += out / grid.h[d]
    return float(np.max(rate))


def compute_dt(state: SimState, ctl: StepControl, chi: float, c_face="harmonic", upwind_n=True) -> float:
    """CFL step ``cfl*h_min / (max|u| + chi*max|grad c / c_face| + eps)``.

    The result is additionally capped by the per-cell outflow bound that makes
    the explicit upwind update a convex combination, then clamped to
    ``[dt_min, dt_max]``.
    """
    grid = state.n.grid
    u = state.fluid.u
    drift = chemotactic_drift(state.c, c_face)
    umax = u.max_abs()
    gmax = max(float(np.max(np.abs(g))) for g in drift)
    dt = ctl.cfl * grid.h_min / (umax + chi * gmax + EPS_GUARD)
    rate = _outflow_rate(u, drift, chi, grid, upwind_n)
    if rate > 0:
        dt = min(dt, 1.0 / rate)
    if dt < ctl.dt_min:
        raise TimestepCollapse(f"CFL step {dt:.3e} below dt_min={ctl.dt_min:.1e}")
    return min(dt, ctl.dt_max)


class _HelmholtzCache:
    def __init__(self):
        self._store = {}

    def get(self, grid, alpha, beta):
        key = (grid, alpha, beta)
        if key not in self._store:
            if len(self._store) > 64:
                self._store.clear()
            self._store[key] = StencilOperator(grid.cells, grid.h, alpha, beta)
        return self._store[key]


_helmholtz = _HelmholtzCache()


def _diffuse(rhs, alpha, dt, what):
    grid = rhs.grid
    op = _helmholtz.get(grid, alpha, dt)
    x, _ = solve_conservative(op, rhs.data.reshape(op.shape), what=what)
    return ScalarField(grid, x.reshape(grid.cells))


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFinite("non-finite values in the solution")


class _Reject(Exception):
    def __init__(self, dt):
        self.dt = dt


def step(state: SimState, ctl: StepControl, cfg, dt: float | None = None, mms=None,
         dt_cap: float = math.inf) -> SimState:
    """Advance ``state`` by one step.

    With ``dt=None`` the step is CFL-controlled (at most ``dt_cap``) and is
    retried with a smaller step whenever the updated velocity and signal
    violate the outflow bound that keeps ``n`` nonnegative.  An explicit
    ``dt`` is taken as given.
    """
    adaptive = dt is None
    if adaptive:
        dt = compute_dt(state, ctl, cfg.chi, cfg.scheme.c_face, cfg.scheme.n_face == "upwind")
        # avoid leaving a sliver before the cap
        if dt > dt_cap * (1.0 - 1e-9):
            dt = dt_cap
    while True:
        try:
            return _advance(state, ctl, cfg, dt, mms, adaptive)
        except _Reject as rej:
            log.debug("step rejected at dt=%.3e, retrying with %.3e", dt, rej.dt)
            dt = rej.dt
            if dt < ctl.dt_min:
                raise TimestepCollapse(f"step {dt:.3e} below dt_min={ctl.dt_min:.1e} at t={state.t:.6g}")


def _advance(state, ctl, cfg, dt, mms, check_rate):
    scheme = cfg.scheme
    chi = cfg.chi
    t1 = state.t + dt
    grid = state.n.grid
    src = mms.sources(t1) if mms is not None else None

    # (a) fluid
    fluid = fluid_step(state.fluid, state.n, state.phi, cfg.kappa, dt,
                       source=None if src is None else src.u)
    u = fluid.u

    # (b) signal: (1 + dt - dt lap) c = c - dt div(u c) + dt n
    c_adv = divergence(advective_flux(state.c, u, scheme.advection)).data
    rhs = state.c.data - dt * c_adv + dt * state.n.data
    if src is not None:
        rhs = rhs + dt * src.c
    c = _diffuse(ScalarField(grid, rhs), 1.0 + dt, dt, "signal diffusion")
    _check_finite(c.data, *u.comps)
    cmin = float(np.min(c.data))
    if not cmin > ctl.c_floor:
        raise SingularityDetected(f"min c = {cmin:.3e} <= c_floor at t={t1:.6g}")

    if check_rate:
        # the transport of n uses the new u and c, which compute_dt has not seen
        rate = _outflow_rate(u, chemotactic_drift(c, scheme.c_face), chi, grid, scheme.n_face == "upwind")
        if dt * rate > 1.0:
            raise _Reject(ctl.cfl / rate)

    # (c) cells: (1 - dt lap) n = n - dt div(u n + chi n grad c / c)
    flux = advective_flux(state.n, u, scheme.advection) + chemotactic_flux(
        state.n, c, chi, scheme.c_face, scheme.n_face, ctl.c_floor)
    rhs = state.n.data - dt * divergence(flux).data
    if src is not None:
        rhs = rhs + dt * src.n
    n = _diffuse(ScalarField(grid, rhs), 1.0, dt, "cell diffusion")
    _check_finite(n.data)
    if scheme.positivity_clamp:
        n = _clamp_preserving_mass(n)
    nmin = float(np.min(n.data))
    if nmin < -ctl.positivity_tol:
        raise PositivityViolation(f"min n = {nmin:.3e} at t={t1:.6g}")
    nmax = float(np.max(n.data))
    if nmax > ctl.n_cap:
        raise BlowupDetected(f"max n = {nmax:.3e} exceeds n_cap at t={t1:.6g}")

    return SimState(t1, n, c, fluid, state.phi, state.step_index + 1, dt, kinetic_energy(state.fluid.u))


def _clamp_preserving_mass(n: ScalarField) -> ScalarField:
    total = np.sum(n.data)
    clipped = np.maximum(n.data, 0.0)
    s = np.sum(clipped)
    if s > 0:
        clipped *= total / s
    return n.with_data(clipped)


def run(cfg, on_step=None, control: StepControl | None = None) -> RunResult:
    """Integrate ``cfg`` up to ``T_end``; errors become the returned status."""
    from .config import build_initial_state, build_mms

    ctl = control or cfg.control
    state = build_initial_state(cfg)
    mms = build_mms(cfg, state)
    recorder = Recorder(cfg.analysis, ctl.c_floor)
    sup_n = initial_max_n = float(np.max(state.n.data))
    status, message = Status.COMPLETED, ""
    try:
        recorder(state)
    except SingularityError as exc:
        return RunResult(state, recorder.series, Status.SINGULARITY, str(exc), 0, sup_n, initial_max_n)
    if on_step is not None:
        on_step(state)
    T = cfg.T_end
    t_eps = 1e-12 * max(1.0, T)
    interval = cfg.record_interval
    next_record = interval
    while state.t < T - t_eps:
        try:
            # land exactly on the next record time and on T_end
            target = min(T, next_record) if interval > 0 else T
            state = step(state, ctl, cfg, mms=mms, dt_cap=target - state.t)
        except tuple(_STATUS_OF) as exc:
            status = next(s for cls, s in _STATUS_OF.items() if isinstance(exc, cls))
            message = str(exc)
            log.info("run stopped: %s", message)
            break
        sup_n = max(sup_n, float(np.max(state.n.data)))
        final = state.t >= T - t_eps
        if final or interval <= 0 or state.t >= next_record - t_eps:
            try:
                recorder(state)
            except SingularityError as exc:
                status, message = Status.SINGULARITY, str(exc)
                break
            if interval > 0:
                k = math.floor((state.t + t_eps) / interval) + 1
                next_record = k * interval
        if on_step is not None:
            on_step(state)
    return RunResult(state, recorder.series, status, message, state.step_index, sup_n, initial_max_n)
