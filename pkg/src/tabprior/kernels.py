"""Hot numeric kernels with numba acceleration and a pure-numpy fallback.

Set ``TABPRIOR_NO_NUMBA=1`` to force the numpy path (used by the benchmark
in ``benchmarks/bench_kernels.py`` and as a safety hatch).
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("TABPRIOR_NO_NUMBA", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

__all__ = ["USE_NUMBA", "pava", "oblivious_ensemble_eval", "pdist_pow"]


def _pava_py(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Linear-time pool-adjacent-violators projection onto nondecreasing sequences."""
    n = y.shape[0]
    out = np.empty(n)
    # Pool stacks: running weighted means, total weights, block lengths.
    means = np.empty(n)
    weights = np.empty(n)
    counts = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        means[top] = y[i]
        weights[top] = w[i]
        counts[top] = 1
        top += 1
        while top > 1 and means[top - 2] > means[top - 1]:
            tot = weights[top - 2] + weights[top - 1]
            means[top - 2] = (
                weights[top - 2] * means[top - 2] + weights[top - 1] * means[top - 1]
            ) / tot
            weights[top - 2] = tot
            counts[top - 2] += counts[top - 1]
            top -= 1
    pos = 0
    for b in range(top):
        for _ in range(counts[b]):
            out[pos] = means[b]
            pos += 1
    return out


def _oblivious_eval_py(X, feats, thr, leaves):
    """Average prediction of an ensemble of symmetric (oblivious) trees.

    Chunked numpy evaluation: all nodes at one depth of one tree share the
    same (feature, threshold), so a tree's leaf index is a bit pattern of
    per-level comparisons.
    """
    n = X.shape[0]
    n_trees, depth = feats.shape
    acc = np.zeros(n)
    chunk = max(1, int(4e6) // max(n, 1))
    for start in range(0, n_trees, chunk):
        f = feats[start : start + chunk]
        t = thr[start : start + chunk]
        bits = X[:, f] >= t  # (n, chunk, depth)
        idx = np.zeros((n, f.shape[0]), dtype=np.int64)
        for lvl in range(depth):
            idx |= bits[:, :, lvl].astype(np.int64) << lvl
        lv = leaves[start : start + chunk]
        acc += lv[np.arange(lv.shape[0])[None, :], idx].sum(axis=1)
    return acc / n_trees


def _pdist_pow_py(X, centers, p):
    """Sum_j |x_j - c_j|^p for all (sample, center) pairs, chunked over samples.

    Computed in float32: the fractional pow dominates and is ~3x faster in
    single precision, while the distances only feed argmin / soft-assignment
    logits where the precision loss is immaterial.  Still deterministic.
    """
    n, d = X.shape
    m = centers.shape[0]
    X = X.astype(np.float32)
    centers = centers.astype(np.float32)
    out = np.empty((n, m), dtype=np.float32)
    chunk = max(1, int(4e6) // max(m * d, 1))
    for s in range(0, n, chunk):
        diff = np.abs(X[s : s + chunk, None, :] - centers[None, :, :])
        out[s : s + chunk] = (diff ** np.float32(p)).sum(axis=-1)
    return out.astype(np.float64)


if USE_NUMBA:

    @njit(cache=True)
    def _pdist_pow_nb(X, centers, p):  # pragma: no cover - exercised via wrapper
        n, d = X.shape
        m = centers.shape[0]
        out = np.empty((n, m))
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    acc += abs(X[i, k] - centers[j, k]) ** p
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _pava_nb(y, w):  # pragma: no cover - exercised via wrapper
        n = y.shape[0]
        out = np.empty(n)
        means = np.empty(n)
        weights = np.empty(n)
        counts = np.empty(n, dtype=np.int64)
        top = 0
        for i in range(n):
            means[top] = y[i]
            weights[top] = w[i]
            counts[top] = 1
            top += 1
            while top > 1 and means[top - 2] > means[top - 1]:
                tot = weights[top - 2] + weights[top - 1]
                means[top - 2] = (
                    weights[top - 2] * means[top - 2]
                    + weights[top - 1] * means[top - 1]
                ) / tot
                weights[top - 2] = tot
                counts[top - 2] += counts[top - 1]
                top -= 1
        pos = 0
        for b in range(top):
            for _ in range(counts[b]):
                out[pos] = means[b]
                pos += 1
        return out

    @njit(cache=True)
    def _oblivious_eval_nb(X, feats, thr, leaves):  # pragma: no cover
        n = X.shape[0]
        n_trees, depth = feats.shape
        acc = np.zeros(n)
        for t in range(n_trees):
            for i in range(n):
                idx = 0
                for lvl in range(depth):
                    if X[i, feats[t, lvl]] >= thr[t, lvl]:
                        idx |= 1 << lvl
                acc[i] += leaves[t, idx]
        return acc / n_trees


def pava(y: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    """Weighted L2 projection of ``y`` onto the nondecreasing cone."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if w is None:
        w = np.ones_like(y)
    else:
        w = np.ascontiguousarray(w, dtype=np.float64)
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
    if y.shape != w.shape or y.ndim != 1:
        raise ValueError("y and w must be 1-D arrays of equal length")
    if USE_NUMBA:
        return _pava_nb(y, w)
    return _pava_py(y, w)


def pdist_pow(X, centers, p: float) -> np.ndarray:
    """Pairwise sum of |x - c|^p between sample rows and center rows.

    Always uses the chunked numpy path: the fractional power dominates the
    cost and numpy's vectorized pow beats the scalar numba loop (see
    benchmarks/bench_kernels.py), so numba brings no win here.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    return _pdist_pow_py(X, centers, float(p))


def oblivious_ensemble_eval(X, feats, thr, leaves) -> np.ndarray:
    """Evaluate a symmetric-tree ensemble, averaging leaf values over trees."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    feats = np.ascontiguousarray(feats, dtype=np.int64)
    thr = np.ascontiguousarray(thr, dtype=np.float64)
    leaves = np.ascontiguousarray(leaves, dtype=np.float64)
    if USE_NUMBA:
        return _oblivious_eval_nb(X, feats, thr, leaves)
    return _oblivious_eval_py(X, feats, thr, leaves)
