"""Time the python and compiled kernel backends on the hot kernels and on whole steps.

    python3 benchmarks/bench_kernels.py [--cells 64 128 256] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from ksfluid import kernels
from ksfluid.config import build_initial_state, parse_config
from ksfluid.stepper import step

CONFIG = """
[grid]
dim = 2
cells = {m}
[model]
chi = 0.5
kappa = 1
T_end = 1.0
[phi]
kind = linear
gradient = 0, -1
[n0]
kind = gaussian
offset = 0.1
amplitude = 2.0
width = 0.1
[c0]
value = 1
"""


def kernel_cases(m, rng):
    x = rng.random((m, m, 1))
    b = rng.random((m, m, 1))
    ih2 = np.array([m * m, m * m, 0.0])
    diag = np.full((m, m, 1), 1.0 + 4.0 * m * m)
    n = rng.random((m, m + 2, 1)) + 0.1
    c = rng.random((m, m + 2, 1)) + 0.5
    u = rng.standard_normal((m, m + 1, 1))
    return {
        "stencil_apply": lambda k: k.stencil_apply(x, diag, 1.0, ih2),
        "rbgs_sweep": lambda k: k.rbgs_sweep(x, b, diag, 1.0, ih2, 0),
        "chemotactic_flux": lambda k: k.chemotactic_flux(n, c, float(m), 0.5, True, True),
        "advective_flux": lambda k: k.advective_flux(n, u, True),
    }


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--cells", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_backend is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    backends = {"python": kernels.python_backend, "compiled": kernels.compiled_backend}
    rng = np.random.default_rng(0)
    print(f"{'case':>18} {'cells':>6} {'python [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}")
    for m in args.cells:
        for name, fn in kernel_cases(m, rng).items():
            t = {b: best(lambda: fn(k), args.repeat, 20) for b, k in backends.items()}
            print(f"{name:>18} {m:>6} {1e3 * t['python']:12.4f} {1e3 * t['compiled']:14.4f} "
                  f"{t['python'] / t['compiled']:8.2f}")
        cfg = parse_config(CONFIG.format(m=m))
        state = build_initial_state(cfg)
        dt = 0.1 / m
        t = {}
        for b in backends:
            kernels.use(b)
            t[b] = best(lambda: [step(state, cfg.control, cfg, dt) for _ in range(args.steps)],
                        max(1, args.repeat // 2), 1) / args.steps
        print(f"{'full step':>18} {m:>6} {1e3 * t['python']:12.4f} {1e3 * t['compiled']:14.4f} "
              f"{t['python'] / t['compiled']:8.2f}")


if __name__ == "__main__":
    main()
