"""Compiled (numba) kernels against their numpy twins.

Workloads mirror the benchmark-table scale: local LPs with a few hundred rows
in d=5, and verification scans over 100x5 perturbation blocks.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import sys
import timeit

import numpy as np

from rcclp import kernels
from rcclp._jit import HAVE_NUMBA


def lp_case(seed, m=120, d=5):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, d))
    G = np.vstack([A, np.eye(d), -np.eye(d)])
    h = np.concatenate([np.linalg.norm(A, axis=1), np.full(2 * d, 1e6)])
    c = rng.standard_normal(d)
    basis0 = np.array([m + j if c[j] <= 0 else m + d + j for j in range(d)], dtype=np.int64)
    return G, h, c, basis0


def scan_case(seed, K=500, m=100, d=5):
    rng = np.random.default_rng(seed)
    A0 = rng.standard_normal((m, d))
    b = np.linalg.norm(A0, axis=1)
    return A0, b, np.zeros(d), rng.uniform(-0.2, 0.2, size=(K, m, d))


def bench(fn, args, repeat, number):
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba unavailable or disabled (RCCLP_NO_NUMBA); nothing to compare", file=sys.stderr)
        return 1

    lps = [lp_case(s) for s in range(20)]
    scan = scan_case(0)
    cases = [
        ("dual simplex (120x5, 20 LPs)",
         lambda f: (lambda: [f(G, h, c, b0, 1e-10, 10_000) for G, h, c, b0 in lps]),
         kernels.dual_simplex_jit, kernels.dual_simplex_numpy, 5),
        ("violation mask (500 x 100x5)",
         lambda f: (lambda: f(*scan, 1e-9)),
         kernels.violation_mask_jit, kernels.violation_mask_numpy, 20),
        ("first violation (500 x 100x5, none)",
         lambda f: (lambda: f(*scan, 1e-9)),
         kernels.first_violation_jit, kernels.first_violation_numpy, 20),
    ]
    print(f"{'kernel':40s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, make, jit_fn, np_fn, number in cases:
        make(jit_fn)()  # compile outside the timing
        t_jit = bench(make(jit_fn), (), args.repeat, number)
        t_np = bench(make(np_fn), (), args.repeat, number)
        print(f"{name:40s} {t_jit * 1e3:12.3f} {t_np * 1e3:12.3f} {t_np / t_jit:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
