"""Admissibility algebra for the exponents used in the a-priori estimates.

All functions are pure.  Open intervals are tested with a margin of
``ENDPOINT_TOL`` so that values that round onto an endpoint are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import AdmissibilityError, DegenerateExponent, UnsupportedDimension

ENDPOINT_TOL = 1e-12


@dataclass(frozen=True)
class AnalysisParams:
    N: int = 2
    chi: float = 0.5
    p: float = 2.0
    r: float = 0.5
    q: float = 2.0
    p0: float = 3.0
    r0: float = 1.0

    @classmethod
    def with_defaults(cls, N, chi, p, r=None, q=None, p0=None, r0=None):
        """Fill unset exponents with the choices used in the estimates.

        ``r`` defaults to the centre of I_p, ``q`` to ``max(2, p - r)``,
        ``p0`` to the midpoint of ``(p, 1/chi^2)`` and ``r0`` to ``(p0-1)/2``.
        """
        if r is None:
            r = (p - 1) / 2
        if q is None:
            q = max(2.0, p - r)
        if p0 is None:
            upper = 1.0 / chi**2
            p0 = 0.5 * (p + upper) if math.isfinite(upper) else p + 1.0
        if r0 is None:
            r0 = (p0 - 1) / 2
        return cls(int(N), float(chi), float(p), float(r), float(q), float(p0), float(r0))


def chi_bound(N: int) -> float:
    """Largest sensitivity of the global-existence regime, ``sqrt(2/N)``."""
    if N not in (2, 3):
        raise UnsupportedDimension(f"N must be 2 or 3, got {N}")
    return math.sqrt(2.0 / N)


def interval_Ip(p: float, chi: float) -> tuple[float, float]:
    if not p > 1:
        raise AdmissibilityError(f"p must exceed 1, got {p}")
    if not p * chi**2 < 1:
        raise AdmissibilityError(f"p*chi^2 must be below 1, got {p * chi**2}")
    root = math.sqrt(1.0 - p * chi**2)
    half = (p - 1) / 2
    return half * (1.0 - root), half * (1.0 + root)


def in_Ip(r: float, p: float, chi: float, tol: float = ENDPOINT_TOL) -> bool:
    lo, hi = interval_Ip(p, chi)
    return lo + tol < r < hi - tol


def discriminant_holds(p: float, r: float, chi: float) -> bool:
    lhs = (2 * p * r + chi * p * (p - 1)) ** 2
    rhs = 4 * p * (p - 1) * (chi * p * r + r * (r + 1))
    return lhs < rhs


@dataclass(frozen=True)
class GNConditions:
    a: float
    b: float
    ab: float
    second_exp: float
    ok: bool


def gn_conditions(N: int, p: float, q: float, r: float) -> GNConditions:
    """Exponents of the Gagliardo-Nirenberg/Young step for ``int c^q``."""
    if q < max(2.0, p - r):
        raise AdmissibilityError(f"q={q} must be at least max(2, p - r) = {max(2.0, p - r)}")
    m = p * q - p + r
    if p * q == 0 or m == 0:
        raise DegenerateExponent(f"pq - p + r = {m}, pq = {p * q}")
    a = 2 * m / (p * q)
    b = N * (q - p + r) / (2 * m)
    ab = a * b
    den = 2 * p * q - N * (q - p + r)
    if den == 0:
        raise DegenerateExponent("2pq - N(q - p + r) = 0")
    second = 2 * (2 * p * q + (N - 2) * p - N * q + (N - 2) * r) / den
    ok = ab < 2 and second < 2 and (N - 1) * r < p
    return GNConditions(a, b, ab, second, ok)


def gronwall_envelope(F0: float, r: float, t: float) -> float:
    return F0 * math.exp(r * t)


@dataclass
class Gate:
    name: str
    passed: bool
    value: str
    warning: bool = False


@dataclass
class ValidationReport:
    params: AnalysisParams
    gates: list = field(default_factory=list)
    interval: tuple | None = None
    interval0: tuple | None = None
    gn: GNConditions | None = None

    @property
    def ok(self):
        return all(g.passed or g.warning for g in self.gates)

    @property
    def in_theorem_regime(self):
        return all(g.passed for g in self.gates)

    def lines(self):
        p = self.params
        out = [
            f"N={p.N}",
            f"chi={p.chi:g}",
            f"chi_bound={chi_bound(p.N):.7f}" if p.N in (2, 3) else "chi_bound=unsupported",
            f"p={p.p:g}",
            f"r={p.r:g}",
            f"q={p.q:g}",
            f"p0={p.p0:g}",
            f"r0={p.r0:g}",
        ]
        if self.interval is not None:
            out.append(f"I_p=({self.interval[0]:.7f},{self.interval[1]:.7f})")
        if self.interval0 is not None:
            out.append(f"I_p0=({self.interval0[0]:.7f},{self.interval0[1]:.7f})")
        if self.gn is not None:
            g = self.gn
            out += [f"a={g.a:.7f}", f"b={g.b:.7f}", f"ab={g.ab:.7f}", f"second_exp={g.second_exp:.7f}"]
        for g in self.gates:
            status = "pass" if g.passed else ("warn" if g.warning else "FAIL")
            out.append(f"gate[{g.name}]={status} ({g.value})")
        out.append(f"all_gates={'pass' if self.in_theorem_regime else ('warn' if self.ok else 'FAIL')}")
        return out


def validate(params: AnalysisParams) -> ValidationReport:
    """Run every admissibility gate and collect the outcome of each."""
    rep = ValidationReport(params)
    P = params
    add = rep.gates.append

    if P.N not in (2, 3):
        add(Gate("dimension", False, f"N={P.N} not in {{2,3}}"))
        return rep
    add(Gate("dimension", True, f"N={P.N}"))
    bound = chi_bound(P.N)
    add(Gate("chi regime", 0 < P.chi < bound, f"chi={P.chi:g}, sqrt(2/N)={bound:.7f}",
             warning=not (0 < P.chi < bound)))

    p_ok = P.p > 1 and P.p * P.chi**2 < 1
    add(Gate("p range", p_ok, f"p={P.p:g} in (1, 1/chi^2={1 / P.chi**2 if P.chi else math.inf:g})"))
    if p_ok:
        rep.interval = interval_Ip(P.p, P.chi)
        add(Gate("r in I_p", in_Ip(P.r, P.p, P.chi),
                 f"r={P.r:g}, I_p=({rep.interval[0]:.7f},{rep.interval[1]:.7f})"))
        if P.r > 0:
            add(Gate("discriminant", discriminant_holds(P.p, P.r, P.chi), f"r={P.r:g}"))
        else:
            add(Gate("discriminant", False, f"r={P.r:g} must be positive"))
    try:
        gn = gn_conditions(P.N, P.p, P.q, P.r)
    except AdmissibilityError as exc:
        add(Gate("GN exponents", False, str(exc)))
    else:
        rep.gn = gn
        add(Gate("GN ab<2", gn.ab < 2, f"ab={gn.ab:.7f}"))
        add(Gate("GN second exponent<2", gn.second_exp < 2, f"{gn.second_exp:.7f}"))
        add(Gate("(N-1)r<p", (P.N - 1) * P.r < P.p, f"(N-1)r={(P.N - 1) * P.r:g}"))

    p0_ok = P.p0 > P.p and P.p0 * P.chi**2 < 1
    add(Gate("p0 range", p0_ok, f"p0={P.p0:g} in (p, 1/chi^2)"))
    add(Gate("r0 definition", abs(P.r0 - (P.p0 - 1) / 2) <= ENDPOINT_TOL * max(1.0, abs(P.r0)),
             f"r0={P.r0:g}, (p0-1)/2={(P.p0 - 1) / 2:g}"))
    if P.p0 > 1 and P.p0 * P.chi**2 < 1:
        rep.interval0 = interval_Ip(P.p0, P.chi)
        add(Gate("r0 in I_p0", in_Ip(P.r0, P.p0, P.chi),
                 f"I_p0=({rep.interval0[0]:.7f},{rep.interval0[1]:.7f})"))
    return rep
