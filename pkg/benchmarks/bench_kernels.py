"""Time the compiled kernels against their plain numpy/Python originals.

Run: python3 benchmarks/bench_kernels.py --repeats 20
"""
import argparse
import time

import numpy as np

from curflow import _kernels as K
from curflow.generators import random_flow
from curflow.decomp import _arcs


def timed(fn, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats * 1e3


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeats", type=int, default=20)
    args = p.parse_args()

    kx = np.linspace(0.5, 8.0, 16)
    ky = np.linspace(1.0, 9.0, 16)
    a = np.array([-3.0, 1.0, 0.5])
    d = np.array([6.0, 2.0, -1.0])

    T = random_flow(5, max_edges=60).current(5)
    verts, tail, head, ws = _arcs(T)
    w = np.array(ws, dtype=np.float64)

    cases = [
        ("delta_length", lambda f: f(a, d, kx, ky, 1e-8), K.delta_length),
        ("g_integral", lambda f: f(0.0, np.inf, kx, ky, 1e-10), K.g_integral),
        ("cycle_cancel", lambda f: f(len(verts), tail, head, w.copy(), 0.0), K.cycle_cancel),
    ]
    # warm up the compiled versions
    for _, call, fn in cases:
        call(fn)
    print(f"{'kernel':<14} {'python ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, call, fn in cases:
        t_py = timed(lambda: call(fn.py), args.repeats)
        t_nb = timed(lambda: call(fn), args.repeats)
        print(f"{name:<14} {t_py:>10.3f} {t_nb:>10.3f} {t_py / max(t_nb, 1e-9):>7.1f}x")

    t0 = time.perf_counter()
    K._trapezoid_numpy(a, d, kx, ky, 1_000_000)
    t_np = time.perf_counter() - t0
    K._trapezoid_loop(a, d, kx, ky, 1000)
    t0 = time.perf_counter()
    K._trapezoid_loop(a, d, kx, ky, 1_000_000)
    t_nb = time.perf_counter() - t0
    print(f"{'trapezoid 1e6':<14} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / max(t_nb, 1e-9):>7.1f}x  (numpy vectorised vs numba loop)")


if __name__ == "__main__":
    main()
