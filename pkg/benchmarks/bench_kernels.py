#!/usr/bin/env python3
"""Compare the compiled and numpy stencil kernels.

    python benchmarks/bench_kernels.py [--sizes 20 40 80 160] [--repeat 5]

For every size the two backends assemble the mapped Laplacian of a wavy
interface; the script checks that the assembled matrices agree and prints
the best-of-``repeat`` time per call.
"""

import argparse
import sys
import timeit

import numpy as np
import scipy.sparse as sp

from fbplab import _kernels_py
from fbplab.fbp_solver import InterfaceCurve

try:
    from fbplab import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _args(n):
    x = 2 * np.pi * np.arange(n) / n
    curve = InterfaceCurve(1.0 - 0.1 * np.sin(x) + 0.05 * np.cos(3 * x), 2.0)
    return curve.heights, curve.slope, curve.curvature, 2.0, n, True


def _assemble(mod, args):
    n = args[4]
    r, c, v = mod.interior_triplets(*args)
    return sp.csr_matrix((v, (r, c)), shape=(n * n, n * n))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--repeat", type=int, default=5)
    opts = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not built; only the numpy kernel is timed")
    print(f"{'N':>5} {'numpy [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for n in opts.sizes:
        args = _args(n)
        number = max(1, 20000 // (n * n))
        t_py = min(timeit.repeat(lambda: _kernels_py.interior_triplets(*args), number=number, repeat=opts.repeat))
        t_py = 1e3 * t_py / number
        if _kernels_c is None:
            print(f"{n:>5} {t_py:>12.3f} {'-':>12} {'-':>8}")
            continue
        diff = abs(_assemble(_kernels_py, args) - _assemble(_kernels_c, args)).max()
        if diff > 1e-10:
            print(f"backends disagree at N={n}: max diff {diff:.3e}", file=sys.stderr)
            return 1
        t_c = min(timeit.repeat(lambda: _kernels_c.interior_triplets(*args), number=number, repeat=opts.repeat))
        t_c = 1e3 * t_c / number
        print(f"{n:>5} {t_py:>12.3f} {t_c:>12.3f} {t_py / t_c:>8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
