"""Structural encodings for tabular transformers.

Three independent pieces: cyclic feature grouping whose shift pattern
(2^l - 1) guarantees that no pair of columns co-occurs in two groups once
m >= 2^k, target-embedding composition that marks training rows, and a
balanced mixed-radix code that splits large class counts into several small
per-view label spaces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GroupingPlan",
    "grouping_plan",
    "gather_groups",
    "add_target_embedding",
    "mixed_radix_bases",
    "encode_views",
    "decode_views",
    "average_views",
]


@dataclass(frozen=True)
class GroupingPlan:
    m: int
    k: int
    groups: np.ndarray  # (m, k) column indices; group j = (j + 2^l - 1) mod m


def grouping_plan(m: int, k: int = 3) -> GroupingPlan:
    """Cyclic grouping with shifts 2^l - 1 (l = 0..k-1): (0, 1, 3, 7, ...).

    For m >= 2^k no unordered column pair appears in two groups.  m = 7 with
    k = 3 also has the property (every pair appears exactly once); smaller m
    can repeat pairs, which is flagged with a warning rather than an error.
    """
    if m < 2:
        raise ValueError("need at least 2 columns")
    if not 1 <= k <= m:
        raise ValueError("require 1 <= k <= m")
    if m < 2**k and not (m == 7 and k == 3):
        warnings.warn(
            f"grouping with m={m} < 2^{k} may repeat column pairs across groups",
            stacklevel=2,
        )
    shifts = (1 << np.arange(k)) - 1  # 0, 1, 3, 7, ...
    groups = (np.arange(m)[:, None] + shifts[None, :]) % m
    return GroupingPlan(m=m, k=k, groups=groups)


def gather_groups(X: np.ndarray, plan: GroupingPlan) -> np.ndarray:
    """Gather an (n, m) matrix into the (n, m, k) group tensor."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != plan.m:
        raise ValueError(f"expected (n, {plan.m}) input, got {X.shape}")
    return X[:, plan.groups]


def add_target_embedding(
    E: np.ndarray, y_embed: np.ndarray, train_mask: np.ndarray
) -> np.ndarray:
    """Add the per-row target embedding to every feature token of train rows.

    Test rows pass through bit-identical.
    """
    E = np.asarray(E)
    y_embed = np.asarray(y_embed)
    train_mask = np.asarray(train_mask, dtype=bool)
    if E.ndim != 3 or y_embed.ndim != 2:
        raise ValueError("expected E (n, m, d) and y_embed (n, d)")
    if E.shape[0] != y_embed.shape[0] or E.shape[2] != y_embed.shape[1]:
        raise ValueError("shape mismatch between E and y_embed")
    if train_mask.shape != (E.shape[0],):
        raise ValueError("train_mask must be (n,)")
    out = E.copy()
    out[train_mask] += y_embed[train_mask][:, None, :]
    return out


def mixed_radix_bases(C: int, max_base: int = 10) -> list[int]:
    """Balanced bases [k_0, ..., k_{D-1}] with k_i <= max_base, prod >= C, D minimal.

    D is the smallest digit count for which ceil(C^(1/D)) fits in a single
    digit; bases are then the floor/ceil of C^(1/D), using as many floors as
    the product constraint allows (max - min <= 1).
    """
    if C < 2:
        raise ValueError("need at least 2 classes")
    D = 1
    while True:
        hi = math.ceil(C ** (1.0 / D))
        # Guard against float roundoff on exact powers.
        while hi > 1 and (hi - 1) ** D >= C:
            hi -= 1
        if hi <= max_base:
            break
        D += 1
    lo = hi - 1
    # Most floors t such that hi^(D-t) * lo^t >= C still holds.
    bases = [hi] * D
    for t in range(D, 0, -1):
        if lo >= 1 and hi ** (D - t) * lo**t >= C:
            bases = [hi] * (D - t) + [lo] * t
            break
    return bases


def encode_views(y: np.ndarray, bases: list[int]) -> list[np.ndarray]:
    """Per-view digits: y^(i) = floor(y / prod_{j>i} k_j) mod k_i."""
    y = np.asarray(y, dtype=np.int64)
    total = math.prod(bases)
    if (y < 0).any() or (y >= total).any():
        raise ValueError(f"labels must lie in [0, {total})")
    digits = []
    for i, k in enumerate(bases):
        place = math.prod(bases[i + 1 :])
        digits.append((y // place) % k)
    return digits


def decode_views(digits: list[np.ndarray], bases: list[int]) -> np.ndarray:
    """Positional reconstruction; inverse of :func:`encode_views`."""
    if len(digits) != len(bases):
        raise ValueError("digit/base count mismatch")
    y = np.zeros_like(np.asarray(digits[0], dtype=np.int64))
    for d, k in zip(digits, bases):
        d = np.asarray(d, dtype=np.int64)
        if (d < 0).any() or (d >= k).any():
            raise ValueError(f"digit out of range for base {k}")
        y = y * k + d
    return y


def average_views(view_outputs: list[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of per-view outputs (the view-aggregation contract)."""
    if not view_outputs:
        raise ValueError("need at least one view")
    stacked = np.stack([np.asarray(v, dtype=float) for v in view_outputs])
    return stacked.mean(axis=0)
