"""The eight random function families and the multi-parent wrapper.

Each family is sampled with frozen parameters (possibly data-dependent, e.g.
tree split points come from the arriving data) and afterwards evaluates as a
pure deterministic map from an (n, d_in) matrix to an (n, d_out) matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matrices import (
    ActivationSpec,
    apply_activation,
    random_activation,
    random_matrix_kind,
    sample_base_points,
    sample_matrix,
)
from .rng import CorrelatedSampler, RngStream, random_weights

__all__ = [
    "FUNCTION_FAMILIES",
    "RandomFunction",
    "MultiFunction",
    "sample_function",
    "sample_multi_function",
    "random_points",
]

FUNCTION_FAMILIES = (
    "nn",
    "tree",
    "discretization",
    "gp",
    "linear",
    "quadratic",
    "em",
    "product",
)

# Families whose sampling draws centers / split points from arriving data.
_NEEDS_DATA = {"tree", "discretization", "em"}

# Cheaper families used for random point generation and product factors.
_POINT_FAMILIES = ("tree", "discretization", "gp", "linear", "quadratic")


class RandomFunction:
    """Base class: frozen parameters, deterministic evaluation."""

    family: str
    d_in: int
    d_out: int

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise ValueError(
                f"{self.family}: expected (n, {self.d_in}) input, got {X.shape}"
            )
        return self._eval(X)

    def _eval(self, X):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass
class WrappedActivation:
    """Standardize / rescale / activation / standardize, with frozen randomness.

    The shift point b is a random sample of the standardized batch, so its
    row indices are re-derived from a frozen seed at call time to keep
    evaluation bit-reproducible.
    """

    spec: ActivationSpec
    scale: float
    b_seed: int

    def __call__(self, X: np.ndarray) -> np.ndarray:
        from .matrices import _standardize  # local to avoid public surface

        Z = _standardize(X)
        picker = RngStream(self.b_seed)
        rows = picker.integers(0, Z.shape[0], size=Z.shape[1])
        b = Z[rows, np.arange(Z.shape[1])]
        return _standardize(self.spec.apply_raw(self.scale * (Z - b)))


def _sample_wrapped_activation(ctx, stream) -> WrappedActivation:
    spec = random_activation(ctx, stream)
    scale = ctx.lognum("activation_rescale", 1.0, 10.0, stream)
    seed = int(stream.integers(0, 2**63))
    return WrappedActivation(spec, scale, seed)


@dataclass
class LinearFn(RandomFunction):
    M: np.ndarray  # (d_out, d_in)
    family: str = "linear"

    def __post_init__(self):
        self.d_out, self.d_in = self.M.shape

    def _eval(self, X):
        return X @ self.M.T


@dataclass
class NNFn(RandomFunction):
    layers: list
    activations: list  # one WrappedActivation (or None) per gap: start, between, end
    d_in: int = 0
    d_out: int = 0
    family: str = "nn"

    def _eval(self, X):
        act_iter = iter(self.activations)
        a = next(act_iter)
        if a is not None:
            X = a(X)
        for layer in self.layers:
            X = layer(X)
            a = next(act_iter)
            if a is not None:
                X = a(X)
        return X


@dataclass
class TreeEnsembleFn(RandomFunction):
    feats: np.ndarray  # (d_out, T, depth)
    thresholds: np.ndarray  # (d_out, T, depth)
    leaves: np.ndarray  # (d_out, T, 2**depth)
    d_in: int = 0
    family: str = "tree"

    def __post_init__(self):
        self.d_out = self.feats.shape[0]

    def _eval(self, X):
        cols = [
            kernels.oblivious_ensemble_eval(
                X, self.feats[k], self.thresholds[k], self.leaves[k]
            )
            for k in range(self.d_out)
        ]
        return np.stack(cols, axis=1)


@dataclass
class DiscretizationFn(RandomFunction):
    centers: np.ndarray  # (m, d_in)
    p: float
    linear: LinearFn  # maps the selected center (d_in) to d_out
    family: str = "discretization"

    def __post_init__(self):
        self.d_in = self.centers.shape[1]
        self.d_out = self.linear.d_out

    def _eval(self, X):
        idx = kernels.pdist_pow(X, self.centers, self.p).argmin(axis=1)
        return self.linear(self.centers[idx])


@dataclass
class GPFn(RandomFunction):
    W_eff: np.ndarray  # (p, d_in): frequency matrix, input map folded in
    b: np.ndarray  # (p,)
    Z: np.ndarray  # (d_out, p)
    family: str = "gp"

    def __post_init__(self):
        self.d_in = self.W_eff.shape[1]
        self.d_out = self.Z.shape[0]

    def _eval(self, X):
        p = self.W_eff.shape[0]
        phi = np.cos(X @ self.W_eff.T + self.b)
        return phi @ self.Z.T / math.sqrt(p)


@dataclass
class QuadraticFn(RandomFunction):
    dims: np.ndarray  # subsampled input dims
    M: np.ndarray  # (d_out, dd+1, dd+1) including the appended constant
    d_in: int = 0
    family: str = "quadratic"

    def __post_init__(self):
        self.d_out = self.M.shape[0]

    def _eval(self, X):
        Xs = X[:, self.dims]
        Xa = np.concatenate([Xs, np.ones((Xs.shape[0], 1))], axis=1)
        return np.einsum("nj,ijk,nk->ni", Xa, self.M, Xa, optimize=True)


@dataclass
class EMAssignmentFn(RandomFunction):
    centers: np.ndarray  # (m, d_in)
    sigmas: np.ndarray  # (m,)
    p: float
    q: float
    linear: LinearFn  # maps m soft-assignment weights to d_out
    family: str = "em"

    def __post_init__(self):
        self.d_in = self.centers.shape[1]
        self.d_out = self.linear.d_out

    def soft_assignments(self, X):
        dist = kernels.pdist_pow(X, self.centers, self.p) ** (1.0 / self.p)
        logits = -0.5 * np.log(2.0 * np.pi * self.sigmas**2) - (
            dist / self.sigmas
        ) ** self.q
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def _eval(self, X):
        return self.linear(self.soft_assignments(X))


@dataclass
class ProductFn(RandomFunction):
    f: RandomFunction
    g: RandomFunction
    family: str = "product"

    def __post_init__(self):
        self.d_in = self.f.d_in
        self.d_out = self.f.d_out

    def _eval(self, X):
        return self.f(X) * self.g(X)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _sample_linear(d_in, d_out, ctx, stream) -> LinearFn:
    kind = random_matrix_kind(ctx, stream)
    return LinearFn(sample_matrix(kind, d_out, d_in, ctx, stream))


def _sample_nn(d_in, d_out, ctx, stream) -> NNFn:
    n_layers = ctx.logint("nn_layers", 1, 3, stream)
    hidden = ctx.logint("nn_hidden", 1, 127, stream)
    dims = [d_in] + [hidden] * (n_layers - 1) + [d_out]
    layers = [_sample_linear(dims[i], dims[i + 1], ctx, stream) for i in range(n_layers)]
    acts: list = []
    acts.append(_sample_wrapped_activation(ctx, stream) if stream.uniform() < 0.5 else None)
    for _ in range(n_layers - 1):
        acts.append(_sample_wrapped_activation(ctx, stream))
    acts.append(_sample_wrapped_activation(ctx, stream) if stream.uniform() < 0.5 else None)
    return NNFn(layers, acts, d_in=d_in, d_out=d_out)


def _sample_tree(d_in, d_out, data, ctx, stream) -> TreeEnsembleFn:
    n_trees = ctx.logint("tree_count", 1, 128, stream)
    depth = ctx.int_("tree_depth", 1, 7, stream)
    stds = data.std(axis=0)
    if stds.sum() <= 0:
        probs = np.full(d_in, 1.0 / d_in)
    else:
        probs = stds / stds.sum()
    n = data.shape[0]
    feats = np.empty((d_out, n_trees, depth), dtype=np.int64)
    thr = np.empty((d_out, n_trees, depth))
    leaves = stream.standard_normal((d_out, n_trees, 2**depth))
    for k in range(d_out):
        f = stream.choice(d_in, size=(n_trees, depth), p=probs)
        rows = stream.integers(0, n, size=(n_trees, depth))
        feats[k] = f
        thr[k] = data[rows, f]
    return TreeEnsembleFn(feats, thr, leaves, d_in=d_in)


def _sample_discretization(d_in, d_out, data, ctx, stream) -> DiscretizationFn:
    m = min(ctx.logint("disc_centers", 2, 255, stream), data.shape[0])
    idx = stream.choice(data.shape[0], size=m, replace=False)
    p = ctx.lognum("disc_p", 0.5, 4.0, stream)
    linear = _sample_linear(d_in, d_out, ctx, stream)
    return DiscretizationFn(np.array(data[idx]), p, linear)


def sample_radii_heavy_tail(a: float, stream: RngStream, size) -> np.ndarray:
    """Inverse-CDF draws of the power-law radius law with tail exponent a."""
    u = np.minimum(stream.uniform(size=size), 1.0 - 1e-12)
    return (1.0 - u) ** (1.0 / (1.0 - a)) - 1.0


def _sample_gp(d_in, d_out, ctx, stream, n_features: int = 256) -> GPFn:
    a = ctx.lognum("gp_tail", 2.0, 20.0, stream)
    if stream.uniform() < 0.5:
        # Isotropic spectral measure with a random linear input map.
        z = stream.standard_normal((n_features, d_in))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms = np.where(norms > 0, norms, 1.0)
        r = sample_radii_heavy_tail(a, stream, (n_features, 1))
        W = r * z / norms
        alpha = ctx.lognum("gp_scale", 0.5, 10.0, stream)
        w = random_weights(d_in, ctx, stream)
        A = stream.standard_normal((d_in, d_in))
        M = alpha * w[:, None] * A
        W_eff = W @ M
    else:
        # Axis-aligned product kernel: per-coordinate radii, no input map.
        mag = sample_radii_heavy_tail(a, stream, (n_features, d_in))
        signs = np.where(stream.uniform(size=(n_features, d_in)) < 0.5, -1.0, 1.0)
        W_eff = mag * signs
    b = stream.uniform(0.0, 2.0 * np.pi, size=n_features)
    Z = stream.standard_normal((d_out, n_features))
    return GPFn(W_eff, b, Z)


def _sample_quadratic(d_in, d_out, ctx, stream) -> QuadraticFn:
    dd = min(d_in, 20)
    dims = (
        stream.choice(d_in, size=dd, replace=False) if d_in > 20 else np.arange(d_in)
    )
    kind = random_matrix_kind(ctx, stream)
    M = sample_matrix(kind, d_out * (dd + 1), dd + 1, ctx, stream)
    return QuadraticFn(np.asarray(dims), M.reshape(d_out, dd + 1, dd + 1), d_in=d_in)


def _sample_em(d_in, d_out, data, ctx, stream) -> EMAssignmentFn:
    m = ctx.logint("em_clusters", 2, max(16, 2 * d_out), stream)
    rows = stream.integers(0, data.shape[0], size=m)
    centers = data[rows] + stream.standard_normal((m, d_in))
    sigmas = np.exp(0.1 * stream.standard_normal(m))
    p = ctx.lognum("em_p", 1.0, 4.0, stream)
    q = ctx.lognum("em_q", 1.0, 2.0, stream)
    linear = _sample_linear(m, d_out, ctx, stream)
    return EMAssignmentFn(centers, sigmas, p, q, linear)


def sample_function(
    d_in: int,
    d_out: int,
    ctx: CorrelatedSampler,
    stream: RngStream,
    family: str | None = None,
    data_hint: np.ndarray | None = None,
) -> RandomFunction:
    """Sample a random function with frozen parameters.

    ``data_hint`` is the data that will arrive at the function; it is
    required for the families whose parameters are data samples.
    """
    if d_in < 1 or d_out < 1:
        raise ValueError("d_in and d_out must be >= 1")
    if family is None:
        idx = ctx.categorical("function_type", len(FUNCTION_FAMILIES), stream)
        family = FUNCTION_FAMILIES[idx]
        if data_hint is None and family in _NEEDS_DATA:
            pool = [f for f in FUNCTION_FAMILIES if f not in _NEEDS_DATA and f != "product"]
            family = pool[int(stream.integers(0, len(pool)))]
    if family in _NEEDS_DATA and data_hint is None:
        raise ValueError(f"family {family!r} requires data_hint")
    if data_hint is not None:
        data_hint = np.asarray(data_hint, dtype=float)
    if family == "nn":
        return _sample_nn(d_in, d_out, ctx, stream)
    if family == "tree":
        return _sample_tree(d_in, d_out, data_hint, ctx, stream)
    if family == "discretization":
        return _sample_discretization(d_in, d_out, data_hint, ctx, stream)
    if family == "gp":
        return _sample_gp(d_in, d_out, ctx, stream)
    if family == "linear":
        return _sample_linear(d_in, d_out, ctx, stream)
    if family == "quadratic":
        return _sample_quadratic(d_in, d_out, ctx, stream)
    if family == "em":
        return _sample_em(d_in, d_out, data_hint, ctx, stream)
    if family == "product":
        pool = list(_POINT_FAMILIES)
        fams = [
            pool[ctx.categorical("product_factor", len(pool), stream)]
            for _ in range(2)
        ]
        f = sample_function(d_in, d_out, ctx, stream, family=fams[0], data_hint=data_hint)
        g = sample_function(d_in, d_out, ctx, stream, family=fams[1], data_hint=data_hint)
        return ProductFn(f, g)
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Multi-parent wrapper
# ---------------------------------------------------------------------------

_AGGREGATIONS = ("sum", "product", "max", "logsumexp")


@dataclass
class MultiFunction:
    """Either concat-then-one-function, or per-parent functions + aggregation."""

    mode: str  # "concat" | "aggregate"
    inner: list
    agg: str | None = None

    def __call__(self, parents: list[np.ndarray]) -> np.ndarray:
        if self.mode == "concat":
            return self.inner[0](np.concatenate(parents, axis=1))
        if len(parents) != len(self.inner):
            raise ValueError("parent count does not match inner functions")
        outs = np.stack([f(p) for f, p in zip(self.inner, parents)])
        if self.agg == "sum":
            return outs.sum(axis=0)
        if self.agg == "product":
            return outs.prod(axis=0)
        if self.agg == "max":
            return outs.max(axis=0)
        if self.agg == "logsumexp":
            m = outs.max(axis=0)
            return m + np.log(np.exp(outs - m).sum(axis=0))
        raise ValueError(f"unknown aggregation {self.agg!r}")


def sample_multi_function(
    parent_dims: list[int],
    d_out: int,
    ctx: CorrelatedSampler,
    stream: RngStream,
    parent_data: list[np.ndarray] | None = None,
) -> MultiFunction:
    if len(parent_dims) == 1 or stream.uniform() < 0.5:
        d_in = sum(parent_dims)
        hint = (
            np.concatenate(parent_data, axis=1) if parent_data is not None else None
        )
        fn = sample_function(d_in, d_out, ctx, stream, data_hint=hint)
        return MultiFunction("concat", [fn])
    agg = _AGGREGATIONS[ctx.categorical("multi_aggregation", len(_AGGREGATIONS), stream)]
    inner = []
    for i, d in enumerate(parent_dims):
        hint = parent_data[i] if parent_data is not None else None
        inner.append(sample_function(d, d_out, ctx, stream, data_hint=hint))
    return MultiFunction("aggregate", inner, agg=agg)


def random_points(
    n: int, d: int, ctx: CorrelatedSampler, stream: RngStream
) -> np.ndarray:
    """Base points from one of four distributions, pushed through a cheap random function."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    base = sample_base_points(n, d, ctx, stream)
    fam = _POINT_FAMILIES[
        ctx.categorical("point_function_type", len(_POINT_FAMILIES), stream)
    ]
    fn = sample_function(d, d, ctx, stream, family=fam, data_hint=base)
    return fn(base)
