"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 3]

Both variants are imported by name, so the LIEBSCHER_DISABLE_NUMBA flag does
not matter here.  Outputs are compared before timing: the integer kernels
must match exactly, the power iteration to 1e-12 relative (numba and numpy
call different ``pow`` implementations).
"""

import argparse
import time

import numpy as np

from liebscher import _kernels as k
from liebscher.empirical import hilbert_bits, lattice


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    K, d = 5, 2
    x0 = np.repeat(rng.random((n, 1)), d, axis=1)
    ys = rng.random((K - 1, n, 1))
    A = np.ones((1, K, d))
    A[0, 1:] = rng.random((K - 1, d))
    pts = rng.random((n, 2))
    lat = lattice(pts, hilbert_bits(2))
    px, py = pts[:, 0].copy(), pts[:, 1].copy()
    return {
        "power_iterate": ((x0, ys, A), k.power_iterate_numba, k.power_iterate_numpy),
        "hilbert_keys": ((lat, hilbert_bits(2)), k.hilbert_keys_numba, k.hilbert_keys_numpy),
        "dominance_counts": ((px, py, px, py, True, True), k.dominance_counts_numba, k.dominance_counts_numpy),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not k.HAVE_NUMBA:
        raise SystemExit("numba is not installed")
    rng = np.random.default_rng(0)
    print(f"n = {args.n}")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, (inputs, fast, slow) in cases(args.n, rng).items():
        fast(*inputs)  # compile
        np.testing.assert_allclose(fast(*inputs), slow(*inputs), rtol=1e-12, atol=0, err_msg=name)
        t_fast = best_of(lambda: fast(*inputs), args.repeat)
        t_slow = best_of(lambda: slow(*inputs), args.repeat)
        print(f"{name:<18}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>10.1f}")


if __name__ == "__main__":
    main()
