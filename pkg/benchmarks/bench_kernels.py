"""Compiled kernels against the numpy/scipy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import os
import timeit
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from whsid import _fallback

try:
    from whsid import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    b = np.array([0.0, 1.0, 0.5]) / 0.95
    a = np.array([0.95, -0.9, 0.9]) / 0.95
    for n in (4096, 16384 * 101):
        x = rng.standard_normal(n)
        yield f"df2t_filter n={n}", "df2t_filter", (b, a, x), lambda: np.zeros(2)
    for shape in ((20, 20, 4096), (100, 20, 16384)):
        y = rng.standard_normal(shape)
        yield f"period_variance {shape}", "period_variance", (y,), None


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    print(f"{'kernel':36s} {'fallback ms':>12s} {'compiled ms':>12s} {'speedup':>8s}")
    for label, name, fargs, state in cases():
        times = {}
        for backend, mod in (("fallback", _fallback), ("compiled", _kernels)):
            if mod is None:
                continue
            fn = getattr(mod, name)
            call = (lambda: fn(*fargs, state())) if state else (lambda: fn(*fargs))
            times[backend] = min(timeit.repeat(call, number=1, repeat=args.repeat)) * 1e3
        comp = times.get("compiled", float("nan"))
        print(f"{label:36s} {times['fallback']:12.2f} {comp:12.2f} {times['fallback'] / comp:7.2f}x")

    # campaign-style use: one filter call per experiment on a thread pool
    workers = os.cpu_count() or 1
    x = np.random.default_rng(1).standard_normal((workers * 4, 16384 * 21))
    b = np.array([0.0, 1.0, 0.5]) / 0.95
    a = np.array([0.95, -0.9, 0.9]) / 0.95
    label = f"df2t_filter x{x.shape[0]} on {workers} threads"
    times = {}
    for backend, mod in (("fallback", _fallback), ("compiled", _kernels)):
        if mod is None:
            continue

        def run(fn=mod.df2t_filter):
            with ThreadPoolExecutor(workers) as pool:
                list(pool.map(lambda row: fn(b, a, row, np.zeros(2)), x))

        times[backend] = min(timeit.repeat(run, number=1, repeat=args.repeat)) * 1e3
    comp = times.get("compiled", float("nan"))
    print(f"{label:36s} {times['fallback']:12.2f} {comp:12.2f} {times['fallback'] / comp:7.2f}x")


if __name__ == "__main__":
    main()
