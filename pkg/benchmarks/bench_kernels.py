"""Timing comparison of the numba-jitted kernels vs their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``.  Each kernel is warmed
up first so numba compilation is excluded from the timings.

Findings on a single-core desktop CPU (times vary by machine):

* ``pava`` and ``oblivious_ensemble_eval`` benefit substantially from the
  jitted scalar loops.
* ``pdist_pow`` does NOT: the cost is dominated by the fractional ``pow``,
  which numpy vectorizes (and computes in float32) faster than the scalar
  numba loop.  The public ``pdist_pow`` therefore always dispatches to the
  numpy path; the jitted variant is kept only for this benchmark.
"""

import timeit

import numpy as np

from tabprior import kernels

assert kernels.USE_NUMBA, (
    "numba unavailable or disabled (TABPRIOR_NO_NUMBA); nothing to compare"
)


def bench(label, fn_nb, fn_py, args, repeat=5, number=3):
    fn_nb(*args)  # warm-up / JIT compile
    fn_py(*args)
    t_nb = min(timeit.repeat(lambda: fn_nb(*args), repeat=repeat, number=number)) / number
    t_py = min(timeit.repeat(lambda: fn_py(*args), repeat=repeat, number=number)) / number
    ratio = t_py / t_nb
    print(f"{label:<28} numba {t_nb * 1e3:9.3f} ms   numpy {t_py * 1e3:9.3f} ms"
          f"   numpy/numba {ratio:6.2f}x")
    return t_nb, t_py


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28} {'jitted':>16}   {'fallback':>16}")

    y = rng.normal(size=100_000).cumsum() + rng.normal(size=100_000)
    w = rng.uniform(0.5, 2.0, size=100_000)
    bench("pava (n=1e5)", kernels._pava_nb, kernels._pava_py, (y, w))

    X = rng.normal(size=(4096, 32))
    n_trees, depth = 256, 6
    feats = rng.integers(0, 32, size=(n_trees, depth))
    thr = rng.normal(size=(n_trees, depth))
    leaves = rng.normal(size=(n_trees, 2**depth))
    bench(
        "oblivious trees (256x4096)",
        kernels._oblivious_eval_nb,
        kernels._oblivious_eval_py,
        (X, feats, thr, leaves),
    )

    Xd = rng.normal(size=(4096, 16))
    centers = rng.normal(size=(64, 16))
    bench("pdist_pow p=1.7 (4096x64)", kernels._pdist_pow_nb, kernels._pdist_pow_py,
          (Xd, centers, 1.7))


if __name__ == "__main__":
    main()
