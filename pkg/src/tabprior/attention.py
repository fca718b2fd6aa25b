"""Attention mathematics with context-size-aware query scaling.

Three query-scaling modes are provided: standard (no rescale), a per-head
scalar multiplied by the log context size, and a query-aware variant where a
small MLP of the log context size produces per-element base scales that are
modulated by a gated MLP of the query itself.  On top of plain scaled
dot-product attention the module offers induced self-attention (two-stage,
O(n*k)) and a selective-KV cross-attention where every row attends only to
the training block.  All operations are pure numpy and return entropy
diagnostics normalized to [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .rng import RngStream

__all__ = [
    "MLP",
    "AttentionParams",
    "AttentionDiagnostics",
    "rescale_queries",
    "attention",
    "induced_self_attention",
    "selective_kv_cross_attention",
    "save_weights",
    "load_weights",
]

MODES = ("standard", "ssmax", "qassmax")

_HIDDEN = 64


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))


@dataclass
class MLP:
    """Two-layer MLP with GELU hidden activation."""

    w1: np.ndarray  # (hidden, d_in)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (d_out, hidden)
    b2: np.ndarray  # (d_out,)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        h = _gelu(x @ self.w1.T + self.b1)
        return h @ self.w2.T + self.b2

    @classmethod
    def random(cls, d_in: int, d_out: int, stream: RngStream, zero_final: bool = False):
        w1 = stream.standard_normal((_HIDDEN, d_in)) / math.sqrt(d_in)
        b1 = np.zeros(_HIDDEN)
        if zero_final:
            w2 = np.zeros((d_out, _HIDDEN))
        else:
            w2 = stream.standard_normal((d_out, _HIDDEN)) / math.sqrt(_HIDDEN)
        b2 = np.zeros(d_out)
        return cls(w1, b1, w2, b2)


@dataclass
class AttentionParams:
    """Head layout plus the scaling mode and its learnable parameters."""

    n_heads: int
    d_head: int
    mode: str = "standard"
    s: np.ndarray | None = None  # ssmax: per-head scalar, shape (n_heads,)
    base_mlp: MLP | None = None  # qassmax: 1 -> n_heads * d_head
    gate_mlp: MLP | None = None  # qassmax: d_head -> d_head, shared over heads

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "ssmax" and self.s is None:
            raise ValueError("ssmax requires per-head scalars")
        if self.mode == "qassmax" and (self.base_mlp is None or self.gate_mlp is None):
            raise ValueError("qassmax requires base and gate MLPs")

    @classmethod
    def random(
        cls, n_heads: int, d_head: int, mode: str, stream: RngStream
    ) -> "AttentionParams":
        """Random initialization; the gate MLP final layer starts at zero,
        so query-aware modulation is exactly the identity at init."""
        if mode == "standard":
            return cls(n_heads, d_head, mode)
        if mode == "ssmax":
            return cls(n_heads, d_head, mode, s=np.exp(stream.normal(0.0, 0.2, n_heads)))
        base = MLP.random(1, n_heads * d_head, stream.split("base"))
        gate = MLP.random(d_head, d_head, stream.split("gate"), zero_final=True)
        return cls(n_heads, d_head, mode, base_mlp=base, gate_mlp=gate)


@dataclass
class AttentionDiagnostics:
    entropy: np.ndarray  # (H, n_q) nats
    normalized_entropy: np.ndarray  # entropy / ln(n_keys), in [0, 1]


def rescale_queries(Q: np.ndarray, n_ctx: int, params: AttentionParams) -> np.ndarray:
    """Apply the mode's context-size-aware query scaling.

    Q has shape (n_q, H, d_head).  Standard: unchanged.  ssmax: q * s_h *
    ln(n_ctx).  qassmax: q ⊙ base(ln n_ctx) ⊙ (1 + tanh(gate(q))), with the
    base MLP output reshaped to (H, d_head) and the gate shared across heads.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 3 or Q.shape[1] != params.n_heads or Q.shape[2] != params.d_head:
        raise ValueError(f"expected (n_q, {params.n_heads}, {params.d_head}), got {Q.shape}")
    if params.mode == "standard":
        return Q
    if n_ctx < 2:
        raise ValueError("context-size scaling needs n_ctx >= 2")
    log_n = math.log(n_ctx)
    if params.mode == "ssmax":
        return Q * (np.asarray(params.s)[None, :, None] * log_n)
    base = params.base_mlp(np.array([[log_n]]))[0].reshape(params.n_heads, params.d_head)
    gate = 1.0 + np.tanh(params.gate_mlp(Q))
    return Q * base[None, :, :] * gate


def _softmax_stable(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _entropy_diagnostics(probs: np.ndarray, n_keys: int) -> AttentionDiagnostics:
    # probs: (H, n_q, n_k); entropy in nats, normalized by ln(n_keys).
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0.0, probs * np.log(probs), 0.0)
    ent = -plogp.sum(axis=-1)
    norm = ent / math.log(n_keys) if n_keys >= 2 else np.zeros_like(ent)
    return AttentionDiagnostics(entropy=ent, normalized_entropy=np.clip(norm, 0.0, 1.0))


def attention(
    Q: np.ndarray,
    K: np.ndarray,
    V: np.ndarray,
    params: AttentionParams,
    mask: np.ndarray | None = None,
    n_ctx: int | None = None,
) -> tuple[np.ndarray, AttentionDiagnostics]:
    """Scaled dot-product attention with entropy diagnostics.

    Shapes: Q (n_q, H, d_head), K (n_k, H, d_head), V (n_k, H, d_v).  An
    optional boolean mask (n_q, n_k) marks *allowed* key positions; a row
    with no allowed key is an error.  n_ctx defaults to the key count and
    feeds the query rescaling.
    """
    Q = np.asarray(Q, dtype=float)
    K = np.asarray(K, dtype=float)
    V = np.asarray(V, dtype=float)
    if K.shape[0] != V.shape[0] or K.shape[1] != Q.shape[1] or K.shape[2] != Q.shape[2]:
        raise ValueError("Q/K/V shape mismatch")
    n_k = K.shape[0]
    if n_ctx is None:
        n_ctx = n_k
    Qr = rescale_queries(Q, n_ctx, params)
    # (H, n_q, n_k)
    logits = np.einsum("qhd,khd->hqk", Qr, K) / math.sqrt(params.d_head)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (Q.shape[0], n_k):
            raise ValueError("mask must be (n_q, n_k)")
        if not mask.any(axis=1).all():
            raise ValueError("a query row has every key masked out")
        logits = np.where(mask[None, :, :], logits, -np.inf)
    probs = _softmax_stable(logits)
    out = np.einsum("hqk,khd->qhd", probs, V)
    return out, _entropy_diagnostics(probs, n_k)


def _split_heads(X: np.ndarray, params: AttentionParams) -> np.ndarray:
    n, d = X.shape
    if d != params.n_heads * params.d_head:
        raise ValueError("feature dim must equal n_heads * d_head")
    return X.reshape(n, params.n_heads, params.d_head)


def _merge_heads(X: np.ndarray) -> np.ndarray:
    n, h, d = X.shape
    return X.reshape(n, h * d)


def induced_self_attention(
    X: np.ndarray, inducing: np.ndarray, params: AttentionParams
) -> np.ndarray:
    """Two-stage attention through k inducing vectors, O(n*k).

    Stage 1: the inducing vectors attend over all n input rows using the
    configured scaling mode with context size n.  Stage 2: the input rows
    attend over the k stage-1 summaries with standard scaling.
    """
    X = np.asarray(X, dtype=float)
    inducing = np.asarray(inducing, dtype=float)
    if inducing.ndim != 2 or inducing.shape[0] < 1:
        raise ValueError("need at least one inducing vector")
    if inducing.shape[1] != X.shape[1]:
        raise ValueError("inducing vectors must match input width")
    Xh = _split_heads(X, params)
    Ih = _split_heads(inducing, params)
    summary, _ = attention(Ih, Xh, Xh, params, n_ctx=X.shape[0])
    std = AttentionParams(params.n_heads, params.d_head, "standard")
    out, _ = attention(Xh, summary, summary, std, n_ctx=summary.shape[0])
    return _merge_heads(out)


def selective_kv_cross_attention(
    rows: np.ndarray, n_train: int, params: AttentionParams
) -> np.ndarray:
    """All rows attend over the first n_train rows only.

    Keys and values are materialized for the training block alone; the
    result matches dense self-attention with test-key columns masked out.
    """
    rows = np.asarray(rows, dtype=float)
    if n_train < 1 or n_train > rows.shape[0]:
        raise ValueError("n_train must be in [1, n_rows]")
    Qh = _split_heads(rows, params)
    Kh = Qh[:n_train]
    out, _ = attention(Qh, Kh, Kh, params, n_ctx=n_train)
    return _merge_heads(out)


# ---------------------------------------------------------------------------
# Weight manifest I/O
# ---------------------------------------------------------------------------


def _collect_tensors(params: AttentionParams) -> dict[str, np.ndarray]:
    tensors = {}
    if params.mode == "ssmax":
        tensors["s"] = np.asarray(params.s, dtype=float)
    elif params.mode == "qassmax":
        for prefix, mlp in (("base", params.base_mlp), ("gate", params.gate_mlp)):
            tensors[f"{prefix}.w1"] = mlp.w1
            tensors[f"{prefix}.b1"] = mlp.b1
            tensors[f"{prefix}.w2"] = mlp.w2
            tensors[f"{prefix}.b2"] = mlp.b2
    return tensors


def save_weights(params: AttentionParams, path) -> None:
    """Flat named-tensor JSON manifest (name, shape, row-major values)."""
    manifest = {
        "n_heads": params.n_heads,
        "d_head": params.d_head,
        "mode": params.mode,
        "tensors": {
            name: {"shape": list(t.shape), "data": t.ravel().tolist()}
            for name, t in _collect_tensors(params).items()
        },
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh)


def load_weights(path) -> AttentionParams:
    with open(path) as fh:
        manifest = json.load(fh)
    tensors = {
        name: np.asarray(entry["data"], dtype=float).reshape(entry["shape"])
        for name, entry in manifest.get("tensors", {}).items()
    }
    mode = manifest["mode"]
    kwargs = {}
    if mode == "ssmax":
        kwargs["s"] = tensors["s"]
    elif mode == "qassmax":
        kwargs["base_mlp"] = MLP(
            tensors["base.w1"], tensors["base.b1"], tensors["base.w2"], tensors["base.b2"]
        )
        kwargs["gate_mlp"] = MLP(
            tensors["gate.w1"], tensors["gate.b1"], tensors["gate.w2"], tensors["gate.b2"]
        )
    return AttentionParams(manifest["n_heads"], manifest["d_head"], mode, **kwargs)
