"""End-to-end synthetic dataset generation.

A dataset is produced by sampling global characteristics, a random DAG whose
edge probabilities come from sigmoid-of-Cauchy scores, per-node random
(multi-)functions, and per-column converters that extract numeric or
categorical features from node activations.  Degenerate results are rejected
and regeneration is retried from a fresh child stream.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .filtering import filter_dataset
from .functions import random_points, sample_function, sample_multi_function
from .matrices import _standardize
from .rng import CorrelatedSampler, RngStream, new_sampler_context, random_weights

__all__ = [
    "GenerationConfig",
    "GeneratedDataset",
    "GenerationExhausted",
    "sample_graph",
    "filter_graph",
    "generate_dataset",
    "generate_batch",
]

MAX_DATASET_RETRIES = 64
MAX_GRAPH_RETRIES = 500


class GenerationExhausted(RuntimeError):
    """Raised when the retry budget is spent; carries rejection telemetry."""

    def __init__(self, telemetry):
        super().__init__(f"dataset generation exhausted retries: {telemetry}")
        self.telemetry = telemetry


@dataclass
class GenerationConfig:
    n_samples: int = 1024
    min_columns: int = 2
    max_columns: int = 100
    task: str = "classification"  # "classification" | "regression"
    train_fraction: float = 0.7
    filtering: bool = True
    max_retries: int = MAX_DATASET_RETRIES

    def __post_init__(self):
        if self.task not in ("classification", "regression"):
            raise ValueError(f"unknown task {self.task!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.min_columns < 1 or self.max_columns < self.min_columns:
            raise ValueError("invalid column range")
        if self.n_samples < 8:
            raise ValueError("need at least 8 samples")


@dataclass
class GeneratedDataset:
    X: np.ndarray
    y: np.ndarray
    column_meta: list  # per-column: ("num", None) or ("cat", cardinality)
    task: str
    n_classes: int | None
    train_mask: np.ndarray
    seed: int
    telemetry: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Graph sampling and filtering
# ---------------------------------------------------------------------------


def sample_graph(n_nodes: int, stream: RngStream) -> np.ndarray:
    """Boolean upper-triangular adjacency: edge (i, j) for i < j."""
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    A = stream.gen.standard_cauchy()
    B = stream.gen.standard_cauchy(n_nodes)
    C = stream.gen.standard_cauchy(n_nodes)
    logits = A + B[:, None] + C[None, :]
    probs = expit(logits)
    edges = stream.uniform(size=(n_nodes, n_nodes)) < probs
    return np.triu(edges, k=1)


def _ancestor_sets(edges: np.ndarray) -> list[set[int]]:
    """Ancestors including self, exploiting that edges go low -> high index."""
    n = edges.shape[0]
    anc = [set() for _ in range(n)]
    for j in range(n):
        anc[j].add(j)
        for i in range(j):
            if edges[i, j]:
                anc[j] |= anc[i]
    return anc


def filter_graph(edges: np.ndarray, x_nodes, y_node: int) -> bool:
    """Accept iff some feature node shares an ancestor (incl. self) with the target node."""
    anc = _ancestor_sets(edges)
    return any(anc[x] & anc[y_node] for x in set(x_nodes))


# ---------------------------------------------------------------------------
# Converters
# ---------------------------------------------------------------------------


@dataclass
class Converter:
    kind: str  # "numeric" | "categorical"
    dim: int
    # numeric
    warp: tuple | None = None  # Kumaraswamy (a, b) or None for identity
    # categorical
    style: str | None = None  # "neighbor" | "softmax"
    out_mode: str | None = None
    c: int = 0
    p: float = 1.0  # neighbor distance exponent
    scale: float = 1.0  # softmax sharpness a
    weights: np.ndarray | None = None  # softmax prior weights


def _sample_numeric_converter(ctx, stream) -> Converter:
    if stream.uniform() < 0.5:
        return Converter("numeric", 1)
    a = ctx.lognum("kumaraswamy_a", 0.2, 5.0, stream)
    b = ctx.lognum("kumaraswamy_b", 0.2, 5.0, stream)
    return Converter("numeric", 1, warp=(a, b))


# Seven combinations: neighbor x {input, index, center, fn_center} and
# softmax x {input, index, points}.
_CAT_COMBOS = (
    ("neighbor", "input"),
    ("neighbor", "index"),
    ("neighbor", "center"),
    ("neighbor", "fn_center"),
    ("softmax", "input"),
    ("softmax", "index"),
    ("softmax", "points"),
)


def _sample_categorical_converter(c: int, ctx, stream) -> Converter:
    style, out_mode = _CAT_COMBOS[
        ctx.categorical("categorical_converter", len(_CAT_COMBOS), stream)
    ]
    if style == "neighbor":
        if c >= 2 and stream.uniform() >= 0.5:
            d = ctx.int_("neighbor_dim", 1, c - 1, stream)
        else:
            d = c
        p = ctx.lognum("neighbor_p", 0.5, 4.0, stream)
        return Converter("categorical", d, style=style, out_mode=out_mode, c=c, p=p)
    a = ctx.lognum("softmax_scale", 0.1, 10.0, stream)
    w = random_weights(c, ctx, stream)
    return Converter(
        "categorical", c, style=style, out_mode=out_mode, c=c, scale=a, weights=w
    )


def apply_converter(
    conv: Converter, X_slice: np.ndarray, ctx: CorrelatedSampler, stream: RngStream
):
    """Extract a dataset column from a node slice, possibly modifying the slice."""
    n, d = X_slice.shape
    if d != conv.dim:
        raise ValueError("slice width does not match converter dim")
    if conv.kind == "numeric":
        v = X_slice[:, 0].copy()
        if conv.warp is None:
            return X_slice, v
        a, b = conv.warp
        lo = X_slice.min(axis=0, keepdims=True)
        hi = X_slice.max(axis=0, keepdims=True)
        span = np.where(hi > lo, hi - lo, 1.0)
        scaled = np.clip((X_slice - lo) / span, 0.0, 1.0)
        return 1.0 - (1.0 - scaled**a) ** b, v

    c = conv.c
    if conv.style == "neighbor":
        uniq = np.unique(X_slice, axis=0)
        if uniq.shape[0] >= c:
            centers = uniq[stream.choice(uniq.shape[0], size=c, replace=False)]
        else:
            centers = X_slice[stream.integers(0, n, size=c)]
        dist = (np.abs(X_slice[:, None, :] - centers[None, :, :]) ** conv.p).sum(axis=-1)
        v = dist.argmin(axis=1)
        if conv.out_mode == "input":
            out = X_slice
        elif conv.out_mode == "index":
            out = np.repeat(v[:, None].astype(float), d, axis=1)
        elif conv.out_mode == "center":
            out = centers[v]
        else:  # fn_center: a random function of the selected center
            fn = sample_function(d, d, ctx, stream, family="linear")
            out = fn(centers)[v]
        return out, v

    # softmax-based
    z = _standardize(X_slice)
    logits = conv.scale * z + np.log(conv.weights + 1e-4)[None, :]
    logits = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    u = stream.uniform(size=(n, 1))
    v = (probs.cumsum(axis=1) < u).sum(axis=1).clip(0, c - 1)
    if conv.out_mode == "input":
        out = X_slice
    elif conv.out_mode == "index":
        out = np.repeat(v[:, None].astype(float), d, axis=1)
    else:  # points: category-indexed random points
        pts = random_points(c, d, ctx, stream)
        out = pts[v]
    return out, v


# ---------------------------------------------------------------------------
# Spec sampling and node pipeline
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _Assignment:
    node: int
    converter: Converter
    column: int  # dataset column index; -1 for the target
    start: int = 0  # dim range [start, start + converter.dim)
    is_target: bool = False


def _sample_column_converters(config, ctx, stream):
    """Column count, converters for x columns, and the target converter."""
    n_columns = int(stream.integers(config.min_columns, config.max_columns + 1))
    cat_ratio = float(np.clip(stream.uniform(-0.5, 1.2), 0.0, 1.0))
    max_card = ctx.logint("max_cardinality", 2, 9, stream)
    correlated_fraction = stream.uniform()
    converters = []
    for _ in range(n_columns):
        if stream.uniform() < cat_ratio:
            if stream.uniform() < correlated_fraction:
                card = ctx.logint("categorical_cardinality", 2, max_card, stream)
            else:
                u = stream.uniform()
                card = int(
                    min(
                        max_card,
                        math.floor(
                            math.exp(u * math.log(max_card + 1.0) + (1 - u) * math.log(2.0))
                        ),
                    )
                )
                card = max(card, 2)
            converters.append(_sample_categorical_converter(card, ctx, stream))
        else:
            converters.append(_sample_numeric_converter(ctx, stream))

    if config.task == "classification":
        n_classes = int(stream.integers(2, 11))
        y_conv = _sample_categorical_converter(n_classes, ctx, stream)
    else:
        n_classes = None
        y_conv = _sample_numeric_converter(ctx, stream)
    return converters, y_conv, n_classes


def _assign_nodes(n_nodes, converters, y_conv, stream):
    def pick_nodes(count):
        n_eligible = int(stream.integers(1, n_nodes + 1))
        subset = stream.choice(n_nodes, size=n_eligible, replace=False)
        return subset[stream.integers(0, n_eligible, size=count)]

    x_nodes = pick_nodes(len(converters))
    y_node = int(pick_nodes(1)[0])
    assignments = [
        _Assignment(int(nd), conv, col)
        for col, (nd, conv) in enumerate(zip(x_nodes, converters))
    ]
    assignments.append(_Assignment(y_node, y_conv, -1, is_target=True))
    return assignments


def _evaluate_graph(n, edges, assignments, ctx, stream):
    """Topological node evaluation; returns raw extracted columns and target."""
    n_nodes = edges.shape[0]
    per_node = [[] for _ in range(n_nodes)]
    for a in assignments:
        per_node[a.node].append(a)

    anc = _ancestor_sets(edges)
    needed = set()
    for a in assignments:
        needed |= anc[a.node]

    node_dims = np.zeros(n_nodes, dtype=int)
    for i in range(n_nodes):
        extra = ctx.logint("node_extra_dims", 1, 32, stream)
        start = 0
        for a in per_node[i]:
            a.start = start
            start += a.converter.dim
        node_dims[i] = start + extra

    outputs = {}
    raw_columns = [None] * (len(assignments) - 1)
    target = None
    for i in range(n_nodes):
        if i not in needed:
            continue
        parents = [k for k in range(i) if edges[k, i] and k in needed]
        node_stream = stream.split(("node", i))
        if parents:
            parent_data = [outputs[k] for k in parents]
            mf = sample_multi_function(
                [p.shape[1] for p in parent_data],
                int(node_dims[i]),
                ctx,
                node_stream,
                parent_data=parent_data,
            )
            X = mf(parent_data)
        else:
            X = random_points(n, int(node_dims[i]), ctx, node_stream)
        X = _standardize(np.nan_to_num(X, nan=0.0, posinf=0.0, neginf=0.0))
        w = random_weights(X.shape[1], ctx, node_stream)
        X = X * w
        norms = np.linalg.norm(X, axis=1).mean()
        if norms > 0:
            X = X / norms
        for a in per_node[i]:
            sl = slice(a.start, a.start + a.converter.dim)
            new_slice, v = apply_converter(a.converter, X[:, sl].copy(), ctx, node_stream)
            X[:, sl] = new_slice
            if a.is_target:
                target = v
            else:
                raw_columns[a.column] = v
        X = X * ctx.lognum("node_importance", 0.1, 10.0, node_stream)
        outputs[i] = X
    return raw_columns, target


# ---------------------------------------------------------------------------
# Postprocessing
# ---------------------------------------------------------------------------


def _clip_outliers(v: np.ndarray) -> np.ndarray:
    med = np.median(v)
    std = v.std()
    if std <= 0:
        return v
    return np.clip(v, med - 4.0 * std, med + 4.0 * std)


def _scale_numeric(v: np.ndarray) -> np.ndarray:
    v = _clip_outliers(v)
    std = v.std()
    return (v - v.mean()) / (std if std > 0 else 1.0)


def _split_with_all_classes(y, n_classes, train_fraction, stream):
    """Train mask containing every class on both sides, or None if impossible."""
    n = len(y)
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, n_classes), n - n_classes)
    mask = np.zeros(n, dtype=bool)
    forced_train, forced_test = [], []
    for k in range(n_classes):
        idx = np.flatnonzero(y == k)
        if len(idx) < 2:
            return None
        pick = stream.choice(len(idx), size=2, replace=False)
        forced_train.append(idx[pick[0]])
        forced_test.append(idx[pick[1]])
    mask[forced_train] = True
    remaining = np.setdiff1d(
        np.arange(n), np.concatenate([forced_train, forced_test])
    )
    need = n_train - len(forced_train)
    if need > 0 and len(remaining) > 0:
        extra = stream.choice(len(remaining), size=min(need, len(remaining)), replace=False)
        mask[remaining[extra]] = True
    return mask


def _postprocess(raw_columns, target, converters, task, config, stream):
    """Clean columns, encode, split, and permute; returns dataset parts or a reason."""
    cols, meta = [], []
    for v, conv in zip(raw_columns, converters):
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            v = np.nan_to_num(v, nan=0.0, posinf=0.0, neginf=0.0)
        uniq = np.unique(v)
        if len(uniq) < 2:
            continue  # single-valued column
        if conv.kind == "categorical":
            codes = np.searchsorted(uniq, v)
            cols.append(codes.astype(float))
            meta.append(("cat", len(uniq)))
        else:
            cols.append(_scale_numeric(v))
            meta.append(("num", None))
    if not cols:
        return None, "no_columns"

    if task == "classification":
        y = np.asarray(target)
        classes = np.unique(y)
        if len(classes) < 2:
            return None, "single_class"
        y = np.searchsorted(classes, y)
        n_classes = len(classes)
        if n_classes > 10:
            return None, "too_many_classes"
        mask = _split_with_all_classes(y, n_classes, config.train_fraction, stream)
        if mask is None:
            return None, "unsplittable_classes"
        # Permute class indices (not categorical feature codes).
        perm = stream.permutation(n_classes)
        y = perm[y].astype(float)
    else:
        y = _scale_numeric(np.asarray(target, dtype=float))
        if np.unique(y).size < 2:
            return None, "constant_target"
        n_classes = None
        n = len(y)
        mask = np.zeros(n, dtype=bool)
        n_train = int(round(config.train_fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        mask[stream.choice(n, size=n_train, replace=False)] = True

    X = np.stack(cols, axis=1)
    order = stream.permutation(X.shape[1])
    X = X[:, order]
    meta = [meta[i] for i in order]

    row_order = stream.permutation(X.shape[0])
    X = X[row_order]
    y = y[row_order]
    mask = mask[row_order]
    return (X, y, meta, n_classes, mask), None


# ---------------------------------------------------------------------------
# Top-level generation
# ---------------------------------------------------------------------------


def _generate_once(config: GenerationConfig, stream: RngStream, telemetry: dict):
    ctx = new_sampler_context(stream.split("ctx"))
    converters, y_conv, _ = _sample_column_converters(config, ctx, stream.split("spec"))

    n_nodes = ctx.logint("graph_nodes", 2, 32, stream.split("nodes"))
    graph_stream = stream.split("graph")
    for retry in range(MAX_GRAPH_RETRIES):
        edges = sample_graph(n_nodes, graph_stream)
        assignments = _assign_nodes(n_nodes, converters, y_conv, graph_stream)
        x_nodes = [a.node for a in assignments if not a.is_target]
        y_node = next(a.node for a in assignments if a.is_target)
        if filter_graph(edges, x_nodes, y_node):
            break
        telemetry["graph_retries"] = telemetry.get("graph_retries", 0) + 1
    else:
        return None, "graph_filter_exhausted"

    raw_columns, target = _evaluate_graph(
        config.n_samples, edges, assignments, ctx, stream.split("eval")
    )
    result, reason = _postprocess(
        raw_columns, target, converters, config.task, config, stream.split("post")
    )
    if result is None:
        return None, reason

    X, y, meta, n_classes, mask = result
    if config.filtering:
        accepted = filter_dataset(
            X, y, config.task == "classification", stream.split("filter")
        )
        if not accepted:
            return None, "predictive_filter"
    return (X, y, meta, n_classes, mask), None


def generate_dataset(config: GenerationConfig, seed: int) -> GeneratedDataset:
    """Generate one dataset; retries rejected draws with fresh child streams."""
    root = RngStream(seed)
    telemetry = {"rejections": {}, "graph_retries": 0}
    t0 = time.perf_counter()
    for attempt in range(config.max_retries):
        stream = root.split(("dataset", attempt))
        out, reason = _generate_once(config, stream, telemetry)
        if out is not None:
            X, y, meta, n_classes, mask = out
            telemetry["attempts"] = attempt + 1
            telemetry["seconds"] = time.perf_counter() - t0
            if config.task == "classification":
                y = y.astype(int)
            return GeneratedDataset(
                X=X,
                y=y,
                column_meta=meta,
                task=config.task,
                n_classes=n_classes,
                train_mask=mask,
                seed=seed,
                telemetry=telemetry,
            )
        telemetry["rejections"][reason] = telemetry["rejections"].get(reason, 0) + 1
    raise GenerationExhausted(telemetry)


def generate_batch(config: GenerationConfig, seed: int, count: int):
    """Deterministic batch: item i depends only on (seed, i)."""
    datasets = []
    for i in range(count):
        item_seed = RngStream(seed).split(("batch", i)).integers(0, 2**63)
        datasets.append(generate_dataset(config, int(item_seed)))
    return datasets
