"""Random matrices, random activations, and base point clouds.

These are the shared building blocks for the random function families: five
matrix types (gaussian, weights, singular-values, kernel, activation) with a
common postprocessing step, 27 fixed + 4 parametric activation functions with
an optional standardize/rescale wrapping, and the base distributions used for
random point sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import CorrelatedSampler, RngStream, random_weights

__all__ = [
    "MATRIX_KINDS",
    "FIXED_ACTIVATIONS",
    "ActivationSpec",
    "random_activation",
    "apply_activation",
    "sample_matrix",
    "random_matrix_kind",
    "sample_base_points",
]

MATRIX_KINDS = ("gaussian", "weights", "singular", "kernel", "activation")


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

_SELU_ALPHA = 1.6732632423543772
_SELU_SCALE = 1.0507009873554805


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax_rows(x):
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _onehot_argmax(x):
    out = np.zeros_like(x)
    out[np.arange(x.shape[0]), x.argmax(axis=-1)] = 1.0
    return out


def _rank_rows(x):
    order = x.argsort(axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(x.shape[-1])[None, :], axis=-1)
    return ranks.astype(float)


_EXP_CLIP = 80.0  # keeps exp-family activations finite for |x| up to 1e3

FIXED_ACTIVATIONS = {
    "tanh": np.tanh,
    "leaky_relu": lambda x: np.where(x >= 0, x, 0.01 * x),
    "elu": lambda x: np.where(x >= 0, x, np.expm1(np.minimum(x, 0.0))),
    "identity": lambda x: x,
    "selu": lambda x: _SELU_SCALE
    * np.where(x >= 0, x, _SELU_ALPHA * np.expm1(np.minimum(x, 0.0))),
    "silu": lambda x: x * _sigmoid(x),
    "relu": lambda x: np.maximum(x, 0.0),
    "softplus": lambda x: np.logaddexp(0.0, x),
    "relu6": lambda x: np.clip(x, 0.0, 6.0),
    "hardtanh": lambda x: np.clip(x, -1.0, 1.0),
    "signum": np.sign,
    "heaviside": lambda x: np.where(x >= 0, 1.0, 0.0),
    "gauss_bump": lambda x: np.exp(-np.minimum(x * x, _EXP_CLIP)),
    "exp": lambda x: np.exp(np.minimum(x, _EXP_CLIP)),
    "indicator_unit": lambda x: ((x >= 0) & (x <= 1)).astype(float),
    "sin": np.sin,
    "square": lambda x: x * x,
    "abs": np.abs,
    "softmax": _softmax_rows,
    "onehot_argmax": _onehot_argmax,
    "argsort": lambda x: x.argsort(axis=-1, kind="stable").astype(float),
    "logsigmoid": lambda x: -np.logaddexp(0.0, -x),
    "log_abs": lambda x: np.log(np.maximum(np.abs(x), 1e-6)),
    "rank": _rank_rows,
    "sigmoid": _sigmoid,
    "round": np.round,
    "mod1": lambda x: x - np.floor(x),
}

_FIXED_NAMES = tuple(FIXED_ACTIVATIONS)

_PARAMETRIC_NAMES = ("relu_pow", "signed_pow", "inv_pow", "int_pow")


@dataclass(frozen=True)
class ActivationSpec:
    name: str
    param: float | int | None = None

    def apply_raw(self, x: np.ndarray) -> np.ndarray:
        """Apply the bare activation, without any standardization wrapping."""
        if self.name in FIXED_ACTIVATIONS:
            return FIXED_ACTIVATIONS[self.name](x)
        q = self.param
        if self.name == "relu_pow":
            return np.maximum(x, 0.0) ** q
        if self.name == "signed_pow":
            return np.sign(x) * np.abs(x) ** q
        if self.name == "inv_pow":
            return (np.abs(x) + 1e-3) ** (-q)
        if self.name == "int_pow":
            return x ** int(q)
        raise ValueError(f"unknown activation {self.name!r}")


def random_activation(ctx: CorrelatedSampler, stream: RngStream) -> ActivationSpec:
    """Pick a fixed activation with probability 2/3, else a parametric one."""
    if stream.uniform() < 2.0 / 3.0:
        idx = ctx.categorical("fixed_activation", len(_FIXED_NAMES), stream)
        return ActivationSpec(_FIXED_NAMES[idx])
    idx = ctx.categorical("parametric_activation", len(_PARAMETRIC_NAMES), stream)
    name = _PARAMETRIC_NAMES[idx]
    if name == "int_pow":
        return ActivationSpec(name, ctx.int_("activation_int_power", 2, 5, stream))
    return ActivationSpec(name, ctx.lognum("activation_power", 0.1, 10.0, stream))


def _standardize(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=0, keepdims=True)
    std = x.std(axis=0, keepdims=True)
    std = np.where(std > 0, std, 1.0)
    return (x - mean) / std


def apply_activation(
    spec: ActivationSpec,
    X: np.ndarray,
    ctx: CorrelatedSampler,
    stream: RngStream,
    wrapped: bool = False,
) -> np.ndarray:
    """Apply an activation; if wrapped, standardize / rescale / standardize.

    The rescale step is x <- a(x - b) with a ~ LogNum(1, 10) and b a random
    sample of the standardized column, which keeps one-sided activations
    (e.g. relu) from collapsing to zero.
    """
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("empty input")
    if not wrapped:
        return spec.apply_raw(X)
    if X.shape[0] < 2:
        raise ValueError("wrapped mode needs at least 2 rows")
    Z = _standardize(X)
    a = ctx.lognum("activation_rescale", 1.0, 10.0, stream)
    rows = stream.integers(0, Z.shape[0], size=Z.shape[1])
    b = Z[rows, np.arange(Z.shape[1])]
    Z = a * (Z - b)
    Z = spec.apply_raw(Z)
    return _standardize(Z)


# ---------------------------------------------------------------------------
# Base point clouds
# ---------------------------------------------------------------------------

_POINT_BASES = ("normal", "cube", "ball", "random_cov")


def sample_base_points(
    n: int,
    d: int,
    ctx: CorrelatedSampler,
    stream: RngStream,
    base: str | None = None,
) -> np.ndarray:
    """Points from one of four base distributions (no random function applied)."""
    if base is None:
        base = _POINT_BASES[ctx.categorical("point_base", len(_POINT_BASES), stream)]
    if base == "normal":
        return stream.standard_normal((n, d))
    if base == "cube":
        return stream.uniform(-1.0, 1.0, (n, d))
    if base == "ball":
        z = stream.standard_normal((n, d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        norms = np.where(norms > 0, norms, 1.0)
        radii = stream.uniform(size=(n, 1)) ** (1.0 / d)
        return z / norms * radii
    if base == "random_cov":
        w = random_weights(d, ctx, stream)
        A = stream.standard_normal((d, d))
        x = stream.standard_normal((n, d))
        return (w * x) @ A.T
    raise ValueError(f"unknown base {base!r}")


# ---------------------------------------------------------------------------
# Random matrices
# ---------------------------------------------------------------------------


def random_matrix_kind(ctx: CorrelatedSampler, stream: RngStream) -> str:
    return MATRIX_KINDS[ctx.categorical("matrix_type", len(MATRIX_KINDS), stream)]


def _sample_matrix_raw(kind, rows, cols, ctx, stream):
    if kind == "gaussian":
        return stream.standard_normal((rows, cols))
    if kind == "weights":
        W = np.stack([random_weights(cols, ctx, stream) for _ in range(rows)])
        M = W * stream.standard_normal((rows, cols))
        norms = np.linalg.norm(M, axis=1, keepdims=True)
        return M / np.where(norms > 0, norms, 1.0)
    if kind == "singular":
        r = min(rows, cols)
        w = random_weights(r, ctx, stream)
        U = stream.standard_normal((rows, r))
        V = stream.standard_normal((cols, r))
        return (U * w) @ V.T
    if kind == "kernel":
        pts = sample_base_points(rows + cols, 3, ctx, stream)
        gamma = ctx.lognum("kernel_gamma", 0.1, 10.0, stream)
        diff = pts[:rows, None, :] - pts[None, rows:, :]
        K = np.exp(-gamma * np.linalg.norm(diff, axis=-1))
        signs = np.where(stream.uniform(size=(rows, cols)) < 0.5, -1.0, 1.0)
        return K * signs
    raise ValueError(f"unknown matrix kind {kind!r}")


def sample_matrix(
    kind: str,
    rows: int,
    cols: int,
    ctx: CorrelatedSampler,
    stream: RngStream,
    inner_kind: str | None = None,
) -> np.ndarray:
    """Sample a rows x cols matrix of the given kind, then postprocess.

    Postprocessing (all kinds): add 1e-6 gaussian noise and normalize each
    row to unit Euclidean norm, which precludes all-zero rows.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if kind == "activation":
        if inner_kind is None:
            others = [k for k in MATRIX_KINDS if k != "activation"]
            inner_kind = others[ctx.categorical("matrix_inner_type", len(others), stream)]
        M = _sample_matrix_raw(inner_kind, rows, cols, ctx, stream)
        act = random_activation(ctx, stream)
        M = act.apply_raw(M.reshape(1, -1)).reshape(rows, cols)
        M = M + stream.normal(0.0, 1e-3, size=(rows, cols))
    else:
        M = _sample_matrix_raw(kind, rows, cols, ctx, stream)
    M = M + 1e-6 * stream.standard_normal((rows, cols))
    norms = np.linalg.norm(M, axis=1, keepdims=True)
    return M / np.where(norms > 0, norms, 1.0)
