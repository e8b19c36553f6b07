"""Timing comparison of the compiled and pure-Python kernel backends.

Run from the repository root:

    python3 benchmarks/bench_backends.py [repeats]

Each kernel is exercised on a fixed batch of representative inputs; the
reported figure is the best of ``repeats`` passes to damp scheduler noise.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from skynoma import _purepy
from skynoma._backend import COMPILED, kernels


def _batch_inputs(seed=0, n=400):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 30.0, n)
    b = rng.uniform(0.01, 30.0, n)
    g2 = rng.uniform(0.05, 2.0, n)
    s2 = rng.uniform(0.005, 0.5, n)
    x = rng.uniform(0.01, 3.0, n)
    eps = rng.uniform(0.01, 0.3, n)
    q1 = 10.0 ** rng.uniform(-12.0, -7.0, n)
    d1 = 10.0 ** rng.uniform(-15.0, -12.0, n)
    theta2 = 10.0 ** rng.uniform(-16.0, -13.0, n)
    w2 = 10.0 ** rng.uniform(-12.0, -8.0, n)
    q2 = 10.0 ** rng.uniform(-13.0, -9.0, n)
    p_sc = rng.uniform(0.1, 2.0, n)
    return dict(a=a, b=b, g2=g2, s2=s2, x=x, eps=eps, q1=q1, d1=d1,
                theta2=theta2, w2=w2, q2=q2, p_sc=p_sc)


def _bench(fn, argrows, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for row in argrows:
            fn(*row)
        best = min(best, time.perf_counter() - t0)
    return best


def main(repeats=5):
    if not COMPILED:
        print("compiled backend unavailable; nothing to compare")
        return 1
    v = _batch_inputs()
    n = len(v["a"])
    cases = [
        ("marcum_q1", [(v["a"][i], v["b"][i]) for i in range(n)]),
        ("fading_cdf", [(v["x"][i], v["g2"][i], v["s2"][i]) for i in range(n)]),
        ("fading_quantile",
         [(v["eps"][i], v["g2"][i], v["s2"][i]) for i in range(n)]),
        ("pair_ee",
         [(0.3, v["q1"][i], v["d1"][i], v["theta2"][i], v["w2"][i],
           v["q2"][i], v["p_sc"][i], 0.5, 2e6, 0.95) for i in range(n)]),
        ("dc_optimize_beta",
         [(v["q1"][i], v["d1"][i], v["theta2"][i], v["w2"][i], v["q2"][i],
           v["p_sc"][i], 0.5, 2e6, 0.95, 0.01, 50) for i in range(n)]),
    ]
    print(f"{n} calls per kernel, best of {repeats} passes\n")
    print(f"{'kernel':<18}{'pure (ms)':>12}{'compiled (ms)':>15}{'speedup':>10}")
    for name, rows in cases:
        t_pure = _bench(getattr(_purepy, name), rows, repeats) * 1e3
        t_comp = _bench(getattr(kernels, name), rows, repeats) * 1e3
        print(f"{name:<18}{t_pure:>12.2f}{t_comp:>15.2f}{t_pure / t_comp:>9.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 5))
