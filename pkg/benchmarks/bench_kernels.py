"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--length N] [--repeat R]

Prints one row per kernel with the median wall time of each backend, the
speedup, and whether the two outputs are identical.
"""

import argparse
import time

import numpy as np

from datasmash import _fallback
from datasmash._backend import compiled_kernels


def cases(n, rng):
    a = rng.integers(0, 3, n, dtype=np.uint8)
    b = rng.integers(0, 3, n, dtype=np.uint8)
    morph = np.array([[0.2, 0.3, 0.5], [0.6, 0.2, 0.2]])
    cum = np.cumsum(morph, axis=1)
    cum[:, -1] = 1.0
    delta = np.array([[0, 1, 1], [1, 0, 0]], dtype=np.int64)
    u = rng.random(n)
    return [
        ("sample_path", (cum, delta, 0, u)),
        ("match_filter", (a, b)),
        ("invert_lockstep", ([a, b], 3)),
        ("ngram_table", (a, 3, 7)),
    ]


def median_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), out


def same(x, y):
    xs = x if isinstance(x, tuple) else (x,)
    ys = y if isinstance(y, tuple) else (y,)
    return all(np.array_equal(p, q) for p, q in zip(xs, ys))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=int, default=10**6)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    compiled = compiled_kernels()
    if compiled is None:
        print("compiled kernels are not built; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16} {'fallback s':>11} {'compiled s':>11} {'speedup':>8}  identical")
    for name, kargs in cases(args.length, rng):
        t_py, out_py = median_time(getattr(_fallback, name), kargs, args.repeat)
        if compiled is None:
            print(f"{name:<16} {t_py:11.4f} {'-':>11} {'-':>8}  -")
            continue
        t_c, out_c = median_time(getattr(compiled, name), kargs, args.repeat)
        print(f"{name:<16} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:7.1f}x  {same(out_py, out_c)}")


if __name__ == "__main__":
    main()
