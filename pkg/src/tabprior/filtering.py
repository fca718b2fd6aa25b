"""Predictive-signal filter: extremely randomized forest with an OOB bootstrap test.

A small bagged forest of fully random trees (uniform random feature, uniform
random threshold, depth 6) is fit on the whole dataset.  The dataset is
accepted only if the out-of-bag predictions beat the mean-label predictor on
at least 95% of 200 bootstrap subsamples of the per-sample squared-error
differences.  Classification targets are one-hot encoded so both task kinds
reduce to (multi-output) regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream

__all__ = ["FilterForest", "filter_dataset", "oob_predictions"]

N_ESTIMATORS = 25
MAX_DEPTH = 6
N_BOOTSTRAP = 200
ACCEPT_FRACTION = 0.95


@dataclass
class _Tree:
    feature: np.ndarray  # (2**depth,) internal nodes in heap order, 1-based
    threshold: np.ndarray
    leaf_values: np.ndarray  # (2**depth, d_out)
    in_bag: np.ndarray  # bool mask over samples


def _fit_tree(X: np.ndarray, Y: np.ndarray, stream: RngStream, depth: int) -> _Tree:
    n, m = X.shape
    boot = stream.integers(0, n, size=n)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[boot] = True
    Xb = X[boot]

    n_internal = 2**depth
    feature = np.zeros(n_internal, dtype=np.int64)
    threshold = np.full(n_internal, np.inf)  # +inf routes everything left

    # Level-order: node indices are heap positions 1..2**depth-1; each
    # bootstrap sample tracks its current node.
    node = np.ones(n, dtype=np.int64)
    for _ in range(depth):
        for nd in np.unique(node):
            mask = node == nd
            if mask.sum() < 2:
                continue
            f = int(stream.integers(0, m))
            col = Xb[mask, f]
            lo, hi = col.min(), col.max()
            if hi <= lo:
                continue
            feature[nd] = f
            threshold[nd] = stream.uniform(lo, hi)
        go_right = Xb[np.arange(n), feature[node]] > threshold[node]
        node = 2 * node + go_right

    leaf_idx = node - 2**depth
    d_out = Y.shape[1]
    sums = np.zeros((2**depth, d_out))
    counts = np.zeros(2**depth)
    np.add.at(sums, leaf_idx, Y[boot])
    np.add.at(counts, leaf_idx, 1.0)
    overall = Y[boot].mean(axis=0)
    leaf_values = np.where(counts[:, None] > 0, sums / np.maximum(counts[:, None], 1.0), overall)
    return _Tree(feature, threshold, leaf_values, in_bag)


def _route(tree: _Tree, X: np.ndarray, depth: int) -> np.ndarray:
    node = np.ones(X.shape[0], dtype=np.int64)
    for _ in range(depth):
        go_right = X[np.arange(X.shape[0]), tree.feature[node]] > tree.threshold[node]
        node = 2 * node + go_right
    return tree.leaf_values[node - 2**depth]


@dataclass
class FilterForest:
    trees: list
    depth: int = MAX_DEPTH

    @classmethod
    def fit(
        cls,
        X: np.ndarray,
        Y: np.ndarray,
        stream: RngStream,
        n_estimators: int = N_ESTIMATORS,
        depth: int = MAX_DEPTH,
    ) -> "FilterForest":
        trees = [_fit_tree(X, Y, stream.split(("tree", t)), depth) for t in range(n_estimators)]
        return cls(trees, depth)

    def oob_predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample OOB mean prediction and a validity mask (OOB for >= 1 tree)."""
        n = X.shape[0]
        d_out = self.trees[0].leaf_values.shape[1]
        acc = np.zeros((n, d_out))
        cnt = np.zeros(n)
        for tree in self.trees:
            oob = ~tree.in_bag
            if not oob.any():
                continue
            acc[oob] += _route(tree, X[oob], self.depth)
            cnt[oob] += 1.0
        valid = cnt > 0
        acc[valid] /= cnt[valid, None]
        return acc, valid


def oob_predictions(X, Y, stream) -> tuple[np.ndarray, np.ndarray]:
    forest = FilterForest.fit(np.asarray(X, float), np.asarray(Y, float), stream)
    return forest.oob_predict(np.asarray(X, float))


def filter_dataset(X: np.ndarray, y: np.ndarray, is_classification: bool, stream: RngStream) -> bool:
    """True iff the forest's OOB predictions beat the constant baseline."""
    X = np.asarray(X, dtype=float)
    if is_classification:
        labels = np.asarray(y, dtype=int)
        Y = np.zeros((len(labels), labels.max() + 1))
        Y[np.arange(len(labels)), labels] = 1.0
    else:
        Y = np.asarray(y, dtype=float).reshape(-1, 1)

    pred, valid = oob_predictions(X, Y, stream.split("forest"))
    if not valid.any():
        return False
    base = Y.mean(axis=0)
    # Paired per-sample difference of squared errors, averaged over outputs.
    diff = ((pred[valid] - Y[valid]) ** 2).mean(axis=1) - ((base - Y[valid]) ** 2).mean(
        axis=1
    )
    boot_stream = stream.split("bootstrap-test")
    n = len(diff)
    idx = boot_stream.integers(0, n, size=(N_BOOTSTRAP, n))
    wins = (diff[idx].mean(axis=1) < 0.0).mean()
    return bool(wins >= ACCEPT_FRACTION)
