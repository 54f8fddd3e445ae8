"""Compare the numba and pure-NumPy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are always importable from ``opaque_mnl._kernels`` regardless
of OPAQUE_MNL_DISABLE_NUMBA, so one process times both.
"""
import argparse
import time

import numpy as np

from opaque_mnl import _kernels as K
from opaque_mnl.opaque import MC_CHUNK, gumbel_chunk


def bench(fn, *args, warmup=1, repeat=5):
    for _ in range(warmup):
        fn(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def case(rng, m):
    v = rng.normal(0, 1.5, m)
    r = rng.uniform(0.5, 5, m)
    return v, r, 0.7 * r.min()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    rows = []

    for m in (8, 12, 16, 20):
        v, r, rho = case(rng, m)
        rows.append((f"inclusion-exclusion m={m}",
                     bench(K.ie_probs_numpy, v, r, rho, repeat=args.repeat),
                     bench(K.ie_probs_jit, v, r, rho, repeat=args.repeat)))

    for m in (3, 9):
        v, r, rho = case(rng, m)
        g = gumbel_chunk(0, 0, MC_CHUNK, m + 1)
        cols = np.arange(1, m + 1)
        rows.append((f"mc counts m={m} ({MC_CHUNK} samples)",
                     bench(K.mc_counts_numpy, g, cols, v, r, rho, True, repeat=args.repeat),
                     bench(K.mc_counts_jit, g, cols, v, r, rho, True, repeat=args.repeat)))

    for m in (3, 9):
        v, r, _ = case(rng, m)
        hi = float(r.min())
        rows.append((f"line search m={m}",
                     bench(K.search_numpy, v, r, hi, 1e-6, 64, repeat=args.repeat),
                     bench(K.search_jit, v, r, hi, 1e-6, 64, repeat=args.repeat)))

    print(f"{'kernel':40s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, t_np, t_nb in rows:
        print(f"{name:40s} {t_np:10.5f} {t_nb:10.5f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
