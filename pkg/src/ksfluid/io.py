"""Series CSV, binary snapshots and verification reports."""
from __future__ import annotations

import csv
import os

import numpy as np

from .errors import SnapshotError
from .fluid import FluidState
from .functionals import SERIES_COLUMNS, FunctionalRecord
from .grid import GridSpec, MacVectorField, ScalarField

SNAP_MAGIC = "KSFLUID-SNAP v1"


def _g17(x):
    return "%.17g" % x


def write_series(series, path):
    """CSV with the fixed header; every real printed with 17 significant digits."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for rec in series:
            fh.write(",".join(_g17(v) for v in rec.row()) + "\n")


def read_series(path):
    with open(path, encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SERIES_COLUMNS:
        raise ValueError(f"{path}: unexpected series header")
    return [FunctionalRecord(*(float(v) for v in row)) for row in rows[1:]]


def write_snapshot(state, path):
    """Header lines then named blocks of little-endian float64, row-major.

    Line 2 lists the cell counts followed by the spacings.
    """
    grid = state.n.grid
    dims = " ".join(str(c) for c in grid.cells)
    spacing = " ".join(repr(h) for h in grid.h)
    blocks = [("n", state.n.data), ("c", state.c.data), ("P", state.fluid.P.data)]
    blocks += [(f"u{d}", comp) for d, comp in enumerate(state.fluid.u.comps)]
    with open(path, "wb") as fh:
        fh.write(f"{SNAP_MAGIC}\n{dims} {spacing}\nt={state.t!r}\n".encode("ascii"))
        for name, data in blocks:
            fh.write(f"FIELD {name}\n".encode("ascii"))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


class Snapshot:
    def __init__(self, grid, t, fields):
        self.grid = grid
        self.t = t
        self.fields = fields

    @property
    def n(self):
        return self.fields["n"]

    @property
    def c(self):
        return self.fields["c"]

    @property
    def P(self):
        return self.fields["P"]

    @property
    def u(self):
        return [self.fields[f"u{d}"] for d in range(self.grid.dim)]

    def to_fields(self):
        g = self.grid
        return (ScalarField(g, self.n), ScalarField(g, self.c),
                FluidState(MacVectorField(g, self.u), ScalarField(g, self.P)))


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        raw = fh.read()
    pos = 0

    def line(what):
        nonlocal pos
        end = raw.find(b"\n", pos)
        if end < 0:
            raise SnapshotError(f"{path}: truncated while reading {what}")
        text = raw[pos:end].decode("ascii", errors="replace")
        pos = end + 1
        return text

    if line("header") != SNAP_MAGIC:
        raise SnapshotError(f"{path}: not a {SNAP_MAGIC} file")
    parts = line("dimensions").split()
    if len(parts) not in (4, 6):
        raise SnapshotError(f"{path}: malformed dimension line")
    dim = len(parts) // 2
    cells = tuple(int(v) for v in parts[:dim])
    h = [float(v) for v in parts[dim:]]
    grid = GridSpec(dim, tuple(c * hh for c, hh in zip(cells, h)), cells)
    tline = line("time")
    if not tline.startswith("t="):
        raise SnapshotError(f"{path}: malformed time line")
    t = float(tline[2:])
    names = ["n", "c", "P"] + [f"u{d}" for d in range(dim)]
    shapes = [grid.cells] * 3 + [grid.face_shape(d) for d in range(dim)]
    fields = {}
    for name, shape in zip(names, shapes):
        head = line(f"block {name}")
        if head != f"FIELD {name}":
            raise SnapshotError(f"{path}: expected 'FIELD {name}', found {head!r}")
        nbytes = 8 * int(np.prod(shape))
        if pos + nbytes > len(raw):
            raise SnapshotError(f"{path}: truncated in block {name}")
        fields[name] = np.frombuffer(raw, dtype="<f8", count=nbytes // 8, offset=pos).reshape(shape).copy()
        pos += nbytes
    return Snapshot(grid, t, fields)


def write_report(reports, path, extra=()):
    """One line per check, then optional ``key=value`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports:
            fh.write(rep.line() + "\n")
        for key, value in extra:
            fh.write(f"{key}={value:.17g}\n" if isinstance(value, float) else f"{key}={value}\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
