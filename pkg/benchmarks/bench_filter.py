"""Timing comparison of the compiled and pure-numpy filter kernels.

Runs the same recursion through the numba-compiled path and the plain
Python fallback over a range of series lengths and prints a small table.

Usage: python3 benchmarks/bench_filter.py [--lengths 1000,10000,100000]
"""

import argparse
import time

import numpy as np

from gasnorm._recursions import GAUSSIAN, filter_recursion_py


def _compiled_kernel():
    try:
        from numba import njit
    except ImportError:
        return None
    return njit(cache=True)(filter_recursion_py)


ARGS = (0.1, 0.05, 0.95, 0.95, 0.0, 0.05, 100.0, 1.0, 0.0, 1.0, 1e-8)


def run_once(kernel, ys):
    t0 = time.perf_counter()
    kernel(ys, GAUSSIAN, *ARGS)
    return time.perf_counter() - t0


def best_of(kernel, ys, repeats=5):
    return min(run_once(kernel, ys) for _ in range(repeats))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lengths", default="1000,10000,100000,1000000")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    lengths = [int(x) for x in args.lengths.split(",")]

    compiled = _compiled_kernel()
    rng = np.random.default_rng(args.seed)

    if compiled is not None:
        t0 = time.perf_counter()
        compiled(rng.normal(size=10), GAUSSIAN, *ARGS)
        print(f"compile + first call: {time.perf_counter() - t0:.3f} s")
    else:
        print("numba unavailable, timing the fallback only")

    print(f"{'length':>10} {'python (s)':>12} {'compiled (s)':>13} {'speedup':>8}")
    for n in lengths:
        ys = rng.normal(size=n)
        t_py = best_of(filter_recursion_py, ys)
        if compiled is None:
            print(f"{n:>10} {t_py:>12.5f} {'-':>13} {'-':>8}")
            continue
        t_nb = best_of(compiled, ys)
        print(f"{n:>10} {t_py:>12.5f} {t_nb:>13.6f} {t_py / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
