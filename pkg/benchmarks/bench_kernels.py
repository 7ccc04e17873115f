"""Compare the numba and numpy kernels on representative sizes.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best wall time of each backend, the
speed-up, and the max abs difference between the two outputs.  The first
numba call (compilation) is excluded.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from degenlab._kernels import NUMBA_KERNELS, NUMPY_KERNELS
from degenlab.fdsolver import LogGrid, RoughCoefficients, assemble_operator
from degenlab.weighted_spaces import ap_interval_family


def _cases(rng):
    n = 200_001
    diag = 4.0 + rng.random(n)
    lower, upper = -rng.random(n), -rng.random(n)
    rhs = rng.standard_normal(n)
    yield "thomas n=2e5", (lower, diag, upper, rhs)

    grid = LogGrid(-3.0, 3.0, 2049)
    op = assemble_operator(RoughCoefficients.constant(0.02), grid)
    m = 2048
    ones = np.ones(m)
    loads = np.zeros((m + 1, grid.n - 2))
    u0 = np.maximum(np.exp(grid.s[1:-1]) - 1.0, 0.0)
    yield "march 2049x2048", (op.kl, op.kd, op.ku, op.kl_b, op.ku_b, op.mass, op.react,
                              0.02 * ones, ones, ones, 0.0, 1.0 / m, 0.5, 2, loads,
                              np.zeros(m + 1), np.full(m + 1, u0[-1]), u0)

    lo, hi = ap_interval_family(2 ** 12)
    yield "ap_sup N=2^12", (lo, hi, 0.5, -0.5, 2.0, 2.0 ** -24)

    pts = np.sort(rng.uniform(0, 100, 400))
    a, b = pts[::2], pts[1::2]
    centers = np.sort(rng.uniform(0, 100, 4000))
    yield "critical_radii 200x4000", (a, b, centers, 0.4)


def _best(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _first(out):
    return out[0] if isinstance(out, tuple) else out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if NUMBA_KERNELS is None:
        raise SystemExit("numba is not importable")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max diff':>12}")
    for label, call_args in _cases(rng):
        key = label.split()[0]
        f_np = getattr(NUMPY_KERNELS, key)
        f_nb = getattr(NUMBA_KERNELS, key)
        f_nb(*call_args)  # compile
        t_np, o_np = _best(f_np, call_args, args.repeat)
        t_nb, o_nb = _best(f_nb, call_args, args.repeat)
        diff = float(np.nanmax(np.abs(np.asarray(_first(o_np)) - np.asarray(_first(o_nb)))))
        print(f"{label:<26}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
