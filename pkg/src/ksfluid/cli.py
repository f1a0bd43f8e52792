"""Command line driver: ``ksfluid simulate|verify|params|scan``."""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import io
from .analysis import AnalysisParams, chi_bound, validate
from .config import load_config
from .errors import AdmissibilityError, ConfigError, InsufficientData, KsfluidError
from .functionals import (CheckReport, check_energy_identity, check_gronwall, check_lower_bound, check_mass,
                          check_nonnegative, time_integrals)
from .stepper import Status, run

EXIT_OK, EXIT_FAILURE, EXIT_SINGULAR = 0, 1, 2

log = logging.getLogger("ksfluid")


def exit_code(status: Status) -> int:
    if status == Status.COMPLETED:
        return EXIT_OK
    if status in (Status.BLOWUP, Status.SINGULARITY):
        return EXIT_SINGULAR
    return EXIT_FAILURE


def _load(path):
    try:
        return load_config(path)
    except (ConfigError, OSError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return None


class _SnapshotWriter:
    def __init__(self, out_dir, count, T):
        self.out_dir = out_dir
        self.times = [T * (k + 1) / count for k in range(count)] if count > 0 and T > 0 else []
        self.written = 0

    def __call__(self, state):
        eps = 1e-12 * max(1.0, state.t)
        while self.written < len(self.times) and state.t >= self.times[self.written] - eps:
            self.written += 1
            io.write_snapshot(state, os.path.join(self.out_dir, f"snap_{self.written:04d}.bin"))


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_FAILURE
    out = io.ensure_dir(args.out or cfg.out_dir)
    snaps = _SnapshotWriter(out, args.snapshots, cfg.T_end)
    result = run(cfg, on_step=snaps if args.snapshots else None)
    io.write_series(result.series, os.path.join(out, "series.csv"))
    print(f"status={result.status} steps={result.steps} t={result.state.t:.6g} "
          f"max_n={float(np.max(result.state.n.data)):.6g} min_c={float(np.min(result.state.c.data)):.6g}")
    if result.message:
        print(result.message, file=sys.stderr)
    return exit_code(result.status)


def _guarded(name, fn):
    try:
        return fn()
    except (AdmissibilityError, InsufficientData) as exc:
        return CheckReport(name, False, math.inf, detail=f"not applicable: {exc}")


def cmd_verify(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_FAILURE
    out = io.ensure_dir(args.out or cfg.out_dir)
    full = run(cfg)
    half = run(cfg, control=cfg.control.halved())
    io.write_series(full.series, os.path.join(out, "series.csv"))
    io.write_series(half.series, os.path.join(out, "series_half_dt.csv"))
    reports = [
        CheckReport("run", full.status == Status.COMPLETED and half.status == Status.COMPLETED, 0.0,
                    detail=f"status={full.status} status_half_dt={half.status}"),
        check_mass(full.series, args.mass_tol),
        check_lower_bound(full.series, args.factor),
        _guarded("gronwall", lambda: check_gronwall(full.series, cfg.analysis, args.slack)),
        _guarded("energy_identity", lambda: check_energy_identity(full.series, half.series)),
        check_nonnegative(full.series),
    ]
    extra = list(time_integrals(full.series).items())
    extra += [(k + "_half_dt", v) for k, v in time_integrals(half.series).items()]
    path = os.path.join(out, "verify_report.txt")
    io.write_report(reports, path, extra)
    for rep in reports:
        print(rep.line())
    ok = all(rep.passed for rep in reports)
    print(f"verify={'PASS' if ok else 'FAIL'} report={path}")
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_params(args) -> int:
    try:
        params = AnalysisParams.with_defaults(args.N, args.chi, args.p, args.r, args.q, args.p0, args.r0)
        report = validate(params)
        lines = report.lines()
    except (KsfluidError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print("\n".join(lines))
    return EXIT_OK if report.in_theorem_regime else EXIT_FAILURE


def parse_range(text):
    """``lo:hi:count`` -> evenly spaced values including both ends."""
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}") from None
    if count < 1 or (count == 1 and lo != hi):
        raise argparse.ArgumentTypeError("count must be >= 1 (and lo == hi when count is 1)")
    return [float(v) for v in np.linspace(lo, hi, count)]


def _scan_one(job):
    cfg, chi, out = job
    sub = cfg.with_chi(chi)
    result = run(sub)
    io.ensure_dir(out)
    io.write_series(result.series, os.path.join(out, "series.csv"))
    state = result.state
    return chi, str(result.status), float(np.max(state.n.data)), float(np.min(state.c.data))


def cmd_scan(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_FAILURE
    out = io.ensure_dir(args.out or cfg.out_dir)
    jobs = [(cfg, chi, os.path.join(out, f"chi_{k:03d}")) for k, chi in enumerate(args.chi)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_scan_one, jobs))
    else:
        rows = [_scan_one(j) for j in jobs]
    bound = chi_bound(cfg.grid.dim)
    header = f"{'chi':>10} {'status':>20} {'max_n':>14} {'min_c':>14}  regime"
    lines = [header]
    with open(os.path.join(out, "scan_summary.csv"), "w", encoding="ascii") as fh:
        fh.write("chi,status,max_n,min_c,regime\n")
        for chi, status, max_n, min_c in rows:
            regime = "theorem" if chi < bound and status == str(Status.COMPLETED) else "exploratory"
            lines.append(f"{chi:10.4f} {status:>20} {max_n:14.6e} {min_c:14.6e}  {regime}")
            fh.write(f"{chi!r},{status},{max_n!r},{min_c!r},{regime}\n")
    print("\n".join(lines))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="ksfluid", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and write its series")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default: out_dir of the config)")
    p.add_argument("--snapshots", type=int, default=0, help="number of evenly spaced snapshots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="simulate, rerun at dt/2 and check every monitored estimate")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--slack", type=float, default=0.05, help="relative slack of the Gronwall envelope")
    p.add_argument("--factor", type=float, default=0.999, help="tolerance factor of the lower bound on c")
    p.add_argument("--mass-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("params", help="check an exponent tuple against the admissibility gates")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--chi", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--r0", type=float)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("scan", help="sweep chi, one run per value")
    p.add_argument("config")
    p.add_argument("--chi", type=parse_range, required=True, metavar="LO:HI:COUNT")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scan)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
