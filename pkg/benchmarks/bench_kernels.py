"""Time the numba kernels against their pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py [--samples 200000] [--repeats 5]

The first numba call per kernel compiles (cached afterward); compilation
happens outside the timed region.  The same selection logic that the
library uses at runtime is exercised through the ``use_numba`` argument,
so these numbers are exactly the two production paths.
"""

import argparse
import time

import numpy as np

from powerlimits import _kernels as K


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    s = args.samples
    angles2 = rng.uniform(0, 2 * np.pi, size=(s, 2))
    lattice = np.array([[p1, p2] for p1 in range(-3, 4) for p2 in range(-3, 4)
                        if (p1, p2) != (0, 0)], dtype=np.int64)
    coeffs = (rng.normal(size=9) + 1j * rng.normal(size=9)).astype(np.complex128)
    poly_lattice = np.array([[p1, p2] for p1 in range(-1, 2) for p2 in range(-1, 2)],
                            dtype=np.int64)
    grid1 = rng.normal(size=360 * 8)
    grid2 = rng.normal(size=(720, 720))

    cases = [
        (f"fourier_sums   (S={s}, K={len(lattice)})",
         lambda u: K.fourier_sums(angles2, lattice, use_numba=u)),
        (f"trig_poly      (S={s}, K=9)",
         lambda u: K.trig_poly_values(poly_lattice, coeffs, angles2, use_numba=u)),
        ("fold_grid 1-D  (G=2880, m=4)",
         lambda u: K.fold_grid(grid1, 4, use_numba=u)),
        ("fold_grid 2-D  (G=720^2, m=4)",
         lambda u: K.fold_grid(grid2, 4, use_numba=u)),
        (f"power_mod      (S={s}, n=2, m=64)",
         lambda u: K.power_mod(angles2, 64, use_numba=u)),
    ]

    if not K.NUMBA_AVAILABLE:
        print("numba unavailable; only the numpy path can run")

    print(f"{'kernel':38s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for name, fn in cases:
        t_np = best_of(lambda: fn(False), args.repeats)
        if K.NUMBA_AVAILABLE:
            fn(True)  # compile outside the timing
            t_nb = best_of(lambda: fn(True), args.repeats)
            print(f"{name:38s} {t_np * 1e3:8.2f}ms {t_nb * 1e3:8.2f}ms {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:38s} {t_np * 1e3:8.2f}ms {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
