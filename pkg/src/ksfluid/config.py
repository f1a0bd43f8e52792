"""INI-style problem description: parsing, validation and re-serialisation.

A config has the sections ``[grid] [model] [phi] [n0] [c0] [u0] [analysis]
[control] [scheme] [output] [mms]``; everything except ``[grid]`` and
``[model]`` may be omitted and then takes the documented defaults.  Unknown
sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .analysis import AnalysisParams
from .errors import ParseError, ValidationError
from .fluid import FluidState, initial_pressure, project
from .grid import GridSpec, MacVectorField, ScalarField
from .stepper import SimState, StepControl

SCALAR_KINDS = ("constant", "gaussian", "cosine", "file")
PHI_KINDS = ("constant", "linear", "file")
CHOICES = {
    "c_face": ("harmonic", "arithmetic"),
    "advection": ("upwind", "central"),
    "n_face": ("upwind", "central"),
    "preconditioner": ("diagonal", "multigrid"),
}


@dataclass(frozen=True)
class FieldSpec:
    """Initial datum.

    ``constant``: ``value`` everywhere.
    ``gaussian``: ``offset + amplitude * exp(-|x - center|^2 / (2 width^2))``.
    ``cosine``: ``value + amplitude * prod_d cos(modes_d * pi * x_d / L_d)``.
    ``file``: whitespace separated samples, row-major (velocity: components
    concatenated, each on its own face grid).

    For the velocity ``value`` and ``amplitude`` hold one entry per axis.
    """

    kind: str = "constant"
    value: tuple = (0.0,)
    amplitude: tuple = (0.0,)
    center: tuple | None = None
    width: float = 0.1
    offset: float = 0.0
    modes: tuple = (1,)
    path: str | None = None


@dataclass(frozen=True)
class PhiSpec:
    kind: str = "constant"
    value: float = 0.0
    gradient: tuple = ()
    path: str | None = None


@dataclass(frozen=True)
class SchemeOptions:
    c_face: str = "harmonic"
    advection: str = "upwind"
    n_face: str = "upwind"
    preconditioner: str = "multigrid"
    deterministic: bool = True
    positivity_clamp: bool = False


@dataclass(frozen=True)
class MmsSpec:
    enabled: bool = False


@dataclass(frozen=True)
class ModelConfig:
    grid: GridSpec
    chi: float = 0.5
    kappa: int = 0
    T_end: float = 1.0
    phi: PhiSpec = PhiSpec()
    n0: FieldSpec = FieldSpec(value=(1.0,))
    c0: FieldSpec = FieldSpec(value=(1.0,))
    u0: FieldSpec = FieldSpec()
    analysis: AnalysisParams = AnalysisParams()
    control: StepControl = StepControl()
    scheme: SchemeOptions = SchemeOptions()
    record_interval: float = 0.0
    mms: MmsSpec = MmsSpec()
    out_dir: str = "out"

    def with_chi(self, chi):
        """Copy with another sensitivity; default-derived exponents follow it."""
        a = self.analysis
        analysis = AnalysisParams.with_defaults(a.N, chi, a.p, a.r, a.q)
        return replace(self, chi=float(chi), analysis=analysis)


# ---------------------------------------------------------------- parsing

_KEYS = {
    "grid": {"dim", "cells", "extent"},
    "model": {"chi", "kappa", "t_end"},
    "phi": {"kind", "value", "gradient", "file"},
    "n0": {"kind", "value", "amplitude", "center", "width", "offset", "modes", "file"},
    "analysis": {"p", "r", "q", "p0", "r0"},
    "control": {f.name for f in fields(StepControl)},
    "scheme": {f.name for f in fields(SchemeOptions)},
    "output": {"record_interval", "out_dir"},
    "mms": {"enabled"},
}
_KEYS["c0"] = _KEYS["u0"] = _KEYS["n0"]
_REQUIRED = ("grid", "model")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]\s*")


def _locate(text):
    """Map ``(section, key)`` to ``(line, column)`` of the value."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip().lower()
            where[(section, None)] = (lineno, m.start(1) + 1)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            where[(section, m.group(1).lower())] = (lineno, m.end() + 1)
    return where


class _Reader:
    def __init__(self, cp, where, base_dir):
        self.cp = cp
        self.where = where
        self.base_dir = base_dir

    def error(self, section, key, msg):
        line, col = self.where.get((section, key), self.where.get((section, None), (None, None)))
        return ParseError(f"[{section}] {key}: {msg}" if key else f"[{section}]: {msg}", line, col)

    def has(self, section, key):
        return self.cp.has_section(section) and self.cp.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.cp.get(section, key).strip()

    def num(self, section, key, default, kind=float):
        s = self.raw(section, key)
        if s is None:
            return default
        try:
            if kind is int:
                v = float(s)
                if v != int(v):
                    raise ValueError
                return int(v)
            return float(s)
        except ValueError:
            raise self.error(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {s!r}") from None

    def vec(self, section, key, default, kind=float):
        s = self.raw(section, key)
        if s is None:
            return default
        try:
            return tuple(kind(float(x)) if kind is int else float(x) for x in re.split(r"[,\s]+", s) if x)
        except ValueError:
            raise self.error(section, key, f"expected a comma separated list of numbers, got {s!r}") from None

    def flag(self, section, key, default):
        s = self.raw(section, key)
        if s is None:
            return default
        low = s.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise self.error(section, key, f"expected a boolean, got {s!r}")

    def choice(self, section, key, options, default):
        s = self.raw(section, key)
        if s is None:
            return default
        if s.lower() not in options:
            raise self.error(section, key, f"must be one of {', '.join(options)}, got {s!r}")
        return s.lower()

    def path(self, section, key):
        s = self.raw(section, key)
        if s is None:
            return None
        return os.path.normpath(os.path.join(self.base_dir, s))


def _per_axis(values, dim, name):
    if len(values) == 1:
        return values * dim
    if len(values) != dim:
        raise ValidationError("grid", f"{name} needs 1 or {dim} entries, got {len(values)}")
    return values


def _field_spec(rd, section, dim, vector=False):
    kinds = SCALAR_KINDS
    default_value = (0.0,) * dim if vector else (0.0,)
    kind = rd.choice(section, "kind", kinds, "constant")
    width = rd.num(section, "width", 0.1)
    if not width > 0:
        raise rd.error(section, "width", "must be positive")
    value = rd.vec(section, "value", default_value)
    amplitude = rd.vec(section, "amplitude", (0.0,) * len(default_value))
    want = dim if vector else 1
    for key, v in (("value", value), ("amplitude", amplitude)):
        if len(v) != want:
            raise rd.error(section, key, f"expected {want} entr{'y' if want == 1 else 'ies'}, got {len(v)}")
    center = rd.vec(section, "center", None)
    if center is not None and len(center) != dim:
        raise rd.error(section, "center", f"expected {dim} entries, got {len(center)}")
    modes = rd.vec(section, "modes", (1,), kind=int)
    if len(modes) not in (1, dim):
        raise rd.error(section, "modes", f"expected 1 or {dim} entries")
    path = rd.path(section, "file")
    if kind == "file" and path is None:
        raise rd.error(section, "kind", "kind = file needs a 'file' key")
    return FieldSpec(kind, value, amplitude, center, width, rd.num(section, "offset", 0.0), modes, path)


def parse_config(text: str, base_dir: str = ".") -> ModelConfig:
    """Parse and validate a config; relative file paths resolve against ``base_dir``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#", ";"),
                                   interpolation=None, strict=True, default_section="\x00")
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any [section]", exc.lineno, 1) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(str(exc).split(":", 1)[-1].strip(), exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ParseError(f"cannot parse {line.strip()!r}", lineno, 1) from None
    where = _locate(text)
    rd = _Reader(cp, where, base_dir)

    for section in cp.sections():
        if section not in _KEYS:
            raise rd.error(section, None, "unknown section")
        for key in cp.options(section):
            if key not in _KEYS[section]:
                raise rd.error(section, key, "unknown key")
    for section in _REQUIRED:
        if not cp.has_section(section):
            raise ParseError(f"missing required section [{section}]", None, None)

    dim = rd.num("grid", "dim", 2, int)
    if dim not in (2, 3):
        raise ValidationError("dimension", f"dim must be 2 or 3, got {dim}")
    if not rd.has("grid", "cells"):
        raise rd.error("grid", None, "missing key 'cells'")
    cells = _per_axis(rd.vec("grid", "cells", None, int), dim, "cells")
    extent = _per_axis(rd.vec("grid", "extent", (1.0,)), dim, "extent")
    try:
        grid = GridSpec(dim, extent, cells)
    except ValueError as exc:
        raise ValidationError("grid", str(exc)) from None

    chi = rd.num("model", "chi", 0.5)
    kappa = rd.num("model", "kappa", 0, int)
    T_end = rd.num("model", "t_end", 1.0)

    phi_kind = rd.choice("phi", "kind", PHI_KINDS, "constant")
    gradient = rd.vec("phi", "gradient", (0.0,) * dim)
    if len(gradient) != dim:
        raise rd.error("phi", "gradient", f"expected {dim} entries")
    phi = PhiSpec(phi_kind, rd.num("phi", "value", 0.0), gradient, rd.path("phi", "file"))
    if phi_kind == "file" and phi.path is None:
        raise rd.error("phi", "kind", "kind = file needs a 'file' key")

    n0 = _field_spec(rd, "n0", dim) if cp.has_section("n0") else FieldSpec(value=(1.0,))
    c0 = _field_spec(rd, "c0", dim) if cp.has_section("c0") else FieldSpec(value=(1.0,))
    u0 = _field_spec(rd, "u0", dim, vector=True) if cp.has_section("u0") else FieldSpec(value=(0.0,) * dim,
                                                                                      amplitude=(0.0,) * dim)
    if u0.kind == "cosine":
        raise rd.error("u0", "kind", "cosine data is only available for scalars")

    p = rd.num("analysis", "p", 2.0)
    analysis = AnalysisParams.with_defaults(dim, chi, p, rd.num("analysis", "r", None),
                                            rd.num("analysis", "q", None), rd.num("analysis", "p0", None),
                                            rd.num("analysis", "r0", None))

    base = StepControl()
    ctl_kw = {}
    for f in fields(StepControl):
        ctl_kw[f.name] = rd.num("control", f.name, getattr(base, f.name), int if f.type in ("int", int) else float)
    try:
        control = StepControl(**ctl_kw)
    except ValueError as exc:
        raise ValidationError("control", str(exc)) from None

    sd = SchemeOptions()
    scheme = SchemeOptions(
        c_face=rd.choice("scheme", "c_face", CHOICES["c_face"], sd.c_face),
        advection=rd.choice("scheme", "advection", CHOICES["advection"], sd.advection),
        n_face=rd.choice("scheme", "n_face", CHOICES["n_face"], sd.n_face),
        preconditioner=rd.choice("scheme", "preconditioner", CHOICES["preconditioner"], sd.preconditioner),
        deterministic=rd.flag("scheme", "deterministic", sd.deterministic),
        positivity_clamp=rd.flag("scheme", "positivity_clamp", sd.positivity_clamp),
    )
    cfg = ModelConfig(
        grid=grid, chi=chi, kappa=kappa, T_end=T_end, phi=phi, n0=n0, c0=c0, u0=u0, analysis=analysis,
        control=control, scheme=scheme,
        record_interval=rd.num("output", "record_interval", 0.0),
        mms=MmsSpec(rd.flag("mms", "enabled", False)),
        out_dir=rd.raw("output", "out_dir", "out"),
    )
    validate_config(cfg)
    return cfg


def load_config(path) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def validate_config(cfg: ModelConfig):
    """Raise ValidationError naming the first violated gate."""
    if cfg.kappa not in (0, 1):
        raise ValidationError("kappa", f"kappa must be 0 or 1, got {cfg.kappa}")
    if cfg.kappa == 1 and cfg.grid.dim == 3:
        raise ValidationError("kappa=0 if N=3",
                              "the convective term (kappa=1) is supported only in two dimensions")
    if not (cfg.chi > 0 and math.isfinite(cfg.chi)):
        raise ValidationError("chi", f"chi must be positive and finite, got {cfg.chi}")
    if not (cfg.T_end >= 0 and math.isfinite(cfg.T_end)):
        raise ValidationError("T_end", f"T_end must be finite and nonnegative, got {cfg.T_end}")
    if cfg.mms.enabled:
        if cfg.phi.kind != "linear":
            raise ValidationError("mms", "manufactured solutions need a linear phi")
        return
    c0 = sample_scalar(cfg.c0, cfg.grid)
    if not float(np.min(c0)) > 0:
        raise ValidationError("inf c0 > 0", f"min c0 = {float(np.min(c0)):g} must be positive")
    n0 = sample_scalar(cfg.n0, cfg.grid)
    if not float(np.min(n0)) >= 0:
        raise ValidationError("n0 >= 0", f"min n0 = {float(np.min(n0)):g} is negative")
    if not (np.all(np.isfinite(c0)) and np.all(np.isfinite(n0))):
        raise ValidationError("finite data", "initial data contain non-finite values")
    sample_phi(cfg.phi, cfg.grid)
    sample_velocity(cfg.u0, cfg.grid)


# --------------------------------------------------------------- sampling

def _read_samples(path, count, what):
    try:
        data = np.loadtxt(path, dtype=float, ndmin=1).ravel()
    except (OSError, ValueError) as exc:
        raise ValidationError(what, f"cannot read {path}: {exc}") from None
    if data.size != count:
        raise ValidationError(what, f"{path} holds {data.size} samples, expected {count}")
    return data


def _gaussian(coords, spec, grid):
    center = spec.center if spec.center is not None else tuple(0.5 * e for e in grid.extent)
    r2 = sum((x - c) ** 2 for x, c in zip(coords, center))
    return np.exp(-r2 / (2.0 * spec.width**2))


def sample_scalar(spec: FieldSpec, grid: GridSpec) -> np.ndarray:
    if spec.kind == "file":
        return _read_samples(spec.path, grid.size, "initial data").reshape(grid.cells)
    coords = grid.cell_coords()
    if spec.kind == "constant":
        return np.full(grid.cells, spec.value[0])
    if spec.kind == "gaussian":
        return spec.offset + spec.amplitude[0] * _gaussian(coords, spec, grid)
    if spec.kind == "cosine":
        modes = spec.modes * grid.dim if len(spec.modes) == 1 else spec.modes
        prof = np.ones(grid.cells)
        for x, m, L in zip(coords, modes, grid.extent):
            prof = prof * np.cos(m * np.pi * x / L)
        return spec.value[0] + spec.amplitude[0] * prof
    raise ValueError(f"unknown field kind {spec.kind!r}")


def sample_velocity(spec: FieldSpec, grid: GridSpec) -> MacVectorField:
    """Raw (unprojected) face samples of ``u0`` with walls zeroed."""
    if spec.kind == "file":
        sizes = [int(np.prod(grid.face_shape(d))) for d in range(grid.dim)]
        data = _read_samples(spec.path, sum(sizes), "initial velocity")
        comps = np.split(data, np.cumsum(sizes)[:-1])
        return MacVectorField(grid, comps)
    value = spec.value * grid.dim if len(spec.value) == 1 else spec.value
    amplitude = spec.amplitude * grid.dim if len(spec.amplitude) == 1 else spec.amplitude
    comps = []
    for d in range(grid.dim):
        if spec.kind == "constant":
            comps.append(np.full(grid.face_shape(d), value[d]))
        elif spec.kind == "gaussian":
            comps.append(amplitude[d] * _gaussian(grid.face_coords(d), spec, grid))
        else:
            raise ValueError(f"unsupported velocity kind {spec.kind!r}")
    return MacVectorField(grid, comps)


def sample_phi(spec: PhiSpec, grid: GridSpec) -> np.ndarray:
    if spec.kind == "constant":
        return np.full(grid.cells, spec.value)
    if spec.kind == "linear":
        coords = grid.cell_coords()
        return spec.value + sum(g * x for g, x in zip(spec.gradient, coords))
    return _read_samples(spec.path, grid.size, "phi").reshape(grid.cells)


def build_mms(cfg: ModelConfig, state=None):
    if not cfg.mms.enabled:
        return None
    from .mms import ManufacturedSolution

    return ManufacturedSolution(cfg)


def build_initial_state(cfg: ModelConfig) -> SimState:
    """Sample the initial data, project ``u0`` and balance the initial pressure."""
    grid = cfg.grid
    ctl = cfg.control
    mms = build_mms(cfg)
    phi = ScalarField(grid, sample_phi(cfg.phi, grid))
    source = None
    if mms is not None:
        n, c, u_raw = mms.exact(0.0)
        source = mms.sources(0.0).u
    else:
        n = ScalarField(grid, sample_scalar(cfg.n0, grid))
        c = ScalarField(grid, sample_scalar(cfg.c0, grid))
        u_raw = sample_velocity(cfg.u0, grid)
    u, _ = project(u_raw, 1.0, ctl.poisson_tol, ctl.poisson_max_iter, cfg.scheme.preconditioner)
    P = initial_pressure(u, n, phi, cfg.kappa, ctl.poisson_tol, ctl.poisson_max_iter,
                         cfg.scheme.preconditioner, source)
    fluid = FluidState(u, P, ctl.poisson_tol, ctl.poisson_max_iter, cfg.scheme.preconditioner)
    from .functionals import kinetic_energy

    return SimState(0.0, n, c, fluid, phi, 0, 0.0, kinetic_energy(u))


# --------------------------------------------------------------- writing

def _fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (tuple, list)):
        return ", ".join(_fmt(v) for v in x)
    return str(x)


def _field_lines(spec: FieldSpec):
    out = [("kind", spec.kind), ("value", spec.value), ("amplitude", spec.amplitude), ("width", spec.width),
           ("offset", spec.offset), ("modes", spec.modes)]
    if spec.center is not None:
        out.append(("center", spec.center))
    if spec.path is not None:
        out.append(("file", spec.path))
    return out


def format_config(cfg: ModelConfig) -> str:
    """Serialise ``cfg`` so that ``parse_config`` returns an equal object.

    File paths are written as stored (absolute after parsing).
    """
    g = cfg.grid
    sections = [
        ("grid", [("dim", g.dim), ("cells", g.cells), ("extent", g.extent)]),
        ("model", [("chi", cfg.chi), ("kappa", cfg.kappa), ("T_end", cfg.T_end)]),
        ("phi", [("kind", cfg.phi.kind), ("value", cfg.phi.value), ("gradient", cfg.phi.gradient)]
         + ([("file", cfg.phi.path)] if cfg.phi.path else [])),
        ("n0", _field_lines(cfg.n0)),
        ("c0", _field_lines(cfg.c0)),
        ("u0", _field_lines(cfg.u0)),
        ("analysis", [(k, v) for k, v in asdict(cfg.analysis).items() if k not in ("N", "chi")]),
        ("control", list(asdict(cfg.control).items())),
        ("scheme", list(asdict(cfg.scheme).items())),
        ("output", [("record_interval", cfg.record_interval), ("out_dir", cfg.out_dir)]),
        ("mms", [("enabled", cfg.mms.enabled)]),
    ]
    lines = []
    for name, items in sections:
        lines.append(f"[{name}]")
        lines += [f"{k} = {_fmt(v)}" for k, v in items]
        lines.append("")
    return "\n".join(lines)
