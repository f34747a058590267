"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat R]

Each kernel is run on solver- and diagnostics-sized inputs; results of both
backends are compared before timing.
"""

import argparse
import timeit

import numpy as np

from geosep import _kernels_py

try:
    from geosep import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    bands, n = 357, 128
    y = rng.uniform(-0.5, 0.5, (bands, n, n))
    v_new = rng.standard_normal((bands, n, n))
    v_old = rng.standard_normal((bands, n, n))
    sigma = rng.uniform(0.5, 2.0, bands)
    bound = rng.uniform(0.1, 1.0, bands)
    yield ("dual_step 357x128x128",
           lambda k: k.dual_step(y.copy(), v_new, v_old, sigma, bound))

    c = rng.standard_normal(1 << 20) + 1j * rng.standard_normal(1 << 20)
    yield "soft_shrink complex 2^20", lambda k: k.soft_shrink(c, 1.0)

    table = rng.random((2048, 200))
    rows = rng.integers(0, 2048, (64, 96))
    cols = rng.integers(0, 200, (65, 96))
    yield "gather_sums 64x65x96", lambda k: k.gather_sums(table, rows, cols)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-9)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not built; only the numpy fallback is timed")
    print(f"{'kernel':28s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, run in cases(rng):
        t_py = min(timeit.repeat(lambda: run(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:28s} {1e3 * t_py:12.2f} {'-':>12s} {'-':>8s}")
            continue
        if not _same(run(_kernels), run(_kernels_py)):
            raise SystemExit(f"{name}: backends disagree")
        t_cy = min(timeit.repeat(lambda: run(_kernels), number=1, repeat=args.repeat))
        print(f"{name:28s} {1e3 * t_py:12.2f} {1e3 * t_cy:12.2f} {t_py / t_cy:8.1f}")


if __name__ == "__main__":
    main()
