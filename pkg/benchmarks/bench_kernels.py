"""Numba vs numpy SC kernel timings.

    python benchmarks/bench_kernels.py [--batch 64] [--repeat 5]
"""
import argparse
import time

import numpy as np

from swpolar import _kernels as K
from swpolar.galois import field_for_size
from swpolar.transform import transform_spec


def problem(q, N, B, seed=0):
    rng = np.random.default_rng(seed)
    post = rng.dirichlet(np.ones(q), size=(B, N))
    kinds = np.where(rng.random((B, N)) < 0.5, K.KIND_DECIDE, K.KIND_KNOWN)
    vals = rng.integers(0, q, (B, N))
    return post, kinds, vals


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        print("numba unavailable (or SWPOLAR_BACKEND=numpy); timing numpy only")
    backends = ["numpy"] + (["numba"] if K.HAVE_NUMBA else [])
    print(f"{'q':>3} {'N':>6} " + " ".join(f"{b + ' ms':>10}" for b in backends) + f" {'speedup':>8}")
    for q in (2, 4):
        f = field_for_size(q)
        for N in (64, 256, 1024):
            idx = K.twist_table(f, transform_spec(f, N).kernel.twist)
            post, kinds, vals = problem(q, N, args.batch)
            ms = {}
            for b in backends:
                K.sc_batch(post[:1], kinds[:1], vals[:1], idx, backend=b)  # compile / warm up
                ms[b] = 1000 * best_of(lambda: K.sc_batch(post, kinds, vals, idx, backend=b), args.repeat)
            speed = ms["numpy"] / ms["numba"] if "numba" in ms else float("nan")
            print(f"{q:>3} {N:>6} " + " ".join(f"{ms[b]:>10.2f}" for b in backends) + f" {speed:>7.1f}x")


if __name__ == "__main__":
    main()
