"""Benchmark the weighted-l1 row projection: compiled kernel vs NumPy.

Run from the repository root:

    python benchmarks/bench_projection.py

Problem sizes mirror the solver's hot call: one projection per coefficient
row per iteration, rows of up to 1e5 voxels.
"""

import time

import numpy as np

from iadl._kernels import _wl1_numpy

try:
    from iadl._kernels import _wl1 as compiled
except ImportError:
    compiled = None

SIZES = [
    (8, 1_600, "mini benchmark"),
    (25, 10_000, "full recipe"),
    (25, 100_000, "large slice"),
    (60, 100_000, "many atoms"),
]
REPEATS = 5


def make_case(rng, k, n):
    v = rng.standard_normal((k, n)) * 2.0
    w = 1.0 / (np.abs(v) + 1e-6)
    # radii that force a projection on most rows
    norms = np.einsum("ij,ij->i", w, np.abs(v))
    phi = norms * rng.uniform(0.05, 0.5, size=k)
    return v, w, phi


def bench(fn, v, w, phi):
    best = np.inf
    for _ in range(REPEATS):
        start = time.perf_counter()
        out = fn(v, w, phi)
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':>15} {'shape':>12} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for k, n, label in SIZES:
        v, w, phi = make_case(rng, k, n)
        t_numpy, out_numpy = bench(_wl1_numpy.project_rows, v, w, phi)
        if compiled is None:
            print(f"{label:>15} {k:>5}x{n:<6} {t_numpy*1e3:>8.1f}ms {'absent':>10}")
            continue
        t_comp, out_comp = bench(compiled.project_rows, v, w, phi)
        agree = np.allclose(out_numpy, out_comp, atol=1e-9)
        print(
            f"{label:>15} {k:>5}x{n:<6} {t_numpy*1e3:>8.1f}ms {t_comp*1e3:>8.1f}ms "
            f"{t_numpy/t_comp:>7.2f}x{'' if agree else '  RESULTS DIFFER'}"
        )


if __name__ == "__main__":
    main()
