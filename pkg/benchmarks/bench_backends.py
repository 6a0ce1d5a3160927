"""Head-to-head timing of the numba kernels against their numpy twins.

Run with the default backend so numba is active; the numpy column calls
the fallback implementations directly, so one process covers both:

    python benchmarks/bench_backends.py [--size 256]

Setting GRAMCERT_DISABLE_NUMBA=1 flips the package-wide default instead
(the numba column then reads n/a).
"""

import argparse
import time

import numpy as np

from gramcert import _accel
from gramcert.convnorm import _gram_filter_step_nb, _gram_filter_step_np
from gramcert.oracle import (_direct_conv_nb, _direct_conv_np,
                             _jacobi_rows_nb, _jacobi_rows_np,
                             _materialize_nb, _materialize_np,
                             _naive_dft_nb, _naive_dft_np)
from gramcert.rng import SplitMix64


def _best_of(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=256,
                    help="matrix side for the Jacobi row")
    args = ap.parse_args()

    gen = SplitMix64(0)
    m = args.size
    W = gen.normal_matrix((m, m))
    G = np.ascontiguousarray(W.T @ W / np.linalg.norm(W) ** 2)
    K = gen.normal_matrix((3, 3, 5, 5))
    X = gen.normal_matrix((3, 24, 24))
    G33 = gen.normal_matrix((2, 2, 33, 33))

    cases = [
        # backends converge rows in different orders; only the max is comparable
        (f"jacobi sigma1 (m={m})",
         lambda: np.max(_jacobi_rows_nb(G.copy(), 1e-14, 60)),
         lambda: np.max(_jacobi_rows_np(G.copy(), 1e-14, 60))),
        ("direct conv (3,3,5,5) n=24",
         lambda: _direct_conv_nb(K, X, False),
         lambda: _direct_conv_np(K, X, False)),
        ("materialize toeplitz n=16",
         lambda: _materialize_nb(K, 16, False),
         lambda: _materialize_np(K, 16, False)),
        ("naive DFT n=32",
         lambda: _naive_dft_nb(K, 32),
         lambda: _naive_dft_np(K, 32)),
        ("filter gram step s=33",
         lambda: _gram_filter_step_nb(G33),
         lambda: _gram_filter_step_np(G33)),
    ]

    print(f"backend available: numba={_accel.NUMBA_AVAILABLE}")
    print(f"{'kernel':<30}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}"
          f"{'max diff':>12}")
    for name, nb_fn, np_fn in cases:
        t_np, out_np = _best_of(np_fn)
        if _accel.NUMBA_AVAILABLE:
            nb_fn()  # trigger compilation outside the timing
            t_nb, out_nb = _best_of(nb_fn)
            diff = float(np.max(np.abs(np.asarray(out_nb) - np.asarray(out_np))))
            print(f"{name:<30}{t_nb:>12.4f}{t_np:>12.4f}"
                  f"{t_np / t_nb:>9.1f}x{diff:>12.2e}")
        else:
            print(f"{name:<30}{'n/a':>12}{t_np:>12.4f}")


if __name__ == "__main__":
    main()
