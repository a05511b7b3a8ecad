"""Time the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``.  The same switch that
selects the fallback at import time (LINOT_NO_NUMBA=1) is what this
script sidesteps by importing both implementations directly.
"""
import time

import numpy as np

from linot._kernels import (
    _build_numba,
    min_alignment_quotient_numpy,
    monotonicity_scan_numpy,
    sinkhorn_potentials_numpy,
)

sinkhorn_nb, monotonicity_nb, quotient_nb = _build_numba()


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up / JIT compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)

    n, m = 70, 100
    x = rng.random((n, 2)) * 28
    y = rng.random((m, 2)) * 28
    cost = ((x[:, None] - y[None, :]) ** 2).sum(-1)
    a = np.full(n, 1.0 / n)
    b = rng.random(m)
    b /= b.sum()
    sk_args = (cost, np.log(a), np.log(b), 0.01 * np.median(cost), 1000, 1e-7)

    pts = np.ascontiguousarray(rng.normal(size=(1500, 2)))
    vals = np.ascontiguousarray(0.8 * pts + rng.normal(scale=0.05, size=pts.shape))

    rows = [
        (
            f"sinkhorn potentials ({n}x{m}, 1000 iters cap)",
            timeit(sinkhorn_potentials_numpy, *sk_args),
            timeit(sinkhorn_nb, *sk_args),
        ),
        (
            "monotonicity scan (1500 pairs^2)",
            timeit(monotonicity_scan_numpy, pts, vals, 1e-9),
            timeit(monotonicity_nb, pts, vals, 1e-9),
        ),
        (
            "alignment quotient (1500 points)",
            timeit(min_alignment_quotient_numpy, pts, vals),
            timeit(quotient_nb, pts, vals),
        ),
    ]

    print(f"{'kernel':<45} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(f"{name:<45} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
