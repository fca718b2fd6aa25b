"""Deterministic, splittable randomness and the correlated scalar sampler.

All randomness in the package flows through :class:`RngStream`, a thin
wrapper around numpy's counter-based Philox generator.  Child streams are
derived from (seed, label) pairs so that independent pipeline stages can be
re-run or parallelized without perturbing each other's draws.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RngStream",
    "ScalarSpec",
    "CorrelatedSampler",
    "random_weights",
]


def _derive_key(seed: int, label) -> int:
    """128-bit Philox key derived deterministically from (seed, label)."""
    raw = f"{seed}\x1f{label!r}".encode()
    return int.from_bytes(hashlib.blake2b(raw, digest_size=16).digest(), "little")


class RngStream:
    """Seeded stream of random numbers with deterministic splitting.

    A stream is single-owner: draws mutate its state.  ``split(label)``
    returns a fresh child whose output depends only on (seed, label), never
    on how much the parent has been consumed.
    """

    __slots__ = ("seed", "_label", "gen")

    def __init__(self, seed: int, _key: int | None = None, _label=None):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._label = _label
        if _key is None:
            _key = _derive_key(self.seed, _label)
        self.gen = np.random.Generator(np.random.Philox(key=_key))

    def split(self, label) -> "RngStream":
        child_label = (self._label, label) if self._label is not None else label
        key = _derive_key(self.seed, child_label)
        return RngStream(self.seed, _key=key, _label=child_label)

    # Thin delegations; kept minimal on purpose.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size=size)

    def permutation(self, x):
        return self.gen.permutation(x)

    def shuffle(self, x):
        self.gen.shuffle(x)

    def choice(self, a, size=None, replace=True, p=None):
        return self.gen.choice(a, size=size, replace=replace, p=p)

    def beta(self, alpha: float, beta: float, size=None):
        """Beta draw via two gammas, stable for extreme shape parameters.

        For very small shapes the gamma draws can underflow to zero; the
        correct limit is then a Bernoulli on the two endpoints.
        """
        g1 = self.gen.standard_gamma(alpha, size=size)
        g2 = self.gen.standard_gamma(beta, size=size)
        denom = g1 + g2
        if size is None:
            if denom <= 0.0:
                return 1.0 if self.gen.uniform() < alpha / (alpha + beta) else 0.0
            return g1 / denom
        out = np.empty_like(g1)
        bad = denom <= 0.0
        np.divide(g1, denom, out=out, where=~bad)
        if bad.any():
            p = alpha / (alpha + beta)
            out[bad] = (self.gen.uniform(size=int(bad.sum())) < p).astype(float)
        return out

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self._label!r})"


_KINDS = ("num", "int", "lognum", "logint")


@dataclass(frozen=True)
class ScalarSpec:
    """Distribution spec for a correlated scalar hyperparameter draw."""

    name: str
    kind: str  # num | int | lognum | logint
    low: float
    high: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown scalar kind {self.kind!r}")
        if not self.low <= self.high:
            raise ValueError(f"require low <= high, got [{self.low}, {self.high}]")
        if self.kind.startswith("log") and self.low <= 0:
            raise ValueError("log-type specs require low > 0")


@dataclass
class CorrelatedSampler:
    """Per-name Beta-parameterized sampler for correlated hyperparameters.

    All draws sharing a name use the same Beta(alpha, beta) base
    distribution (numeric) or the same weight vector (categorical), making
    repeated hyperparameters of one dataset correlated.  Lifetime is one
    dataset generation.
    """

    param_stream: RngStream
    numeric_params: dict = field(default_factory=dict)
    categorical_weights: dict = field(default_factory=dict)

    def _beta_params(self, name: str) -> tuple[float, float]:
        if name not in self.numeric_params:
            t = self.param_stream.uniform()
            log_s = self.param_stream.uniform(math.log(0.1), math.log(10000.0))
            s = math.exp(log_s)
            self.numeric_params[name] = (s * t, s * (1.0 - t))
        return self.numeric_params[name]

    def base_uniform(self, name: str, stream: RngStream) -> float:
        alpha, beta = self._beta_params(name)
        return float(stream.beta(alpha, beta))

    def scalar(self, spec: ScalarSpec, stream: RngStream):
        """Draw a scalar per the spec's kind, correlated through its name."""
        u = self.base_uniform(spec.name, stream)
        low, high = spec.low, spec.high
        if spec.kind == "num":
            return low + u * (high - low)
        if spec.kind == "lognum":
            return math.exp(math.log(low) + u * (math.log(high) - math.log(low)))
        if spec.kind == "int":
            v = math.floor(low + u * (high - low + 1.0))
            return int(min(max(v, low), high))
        # logint: uniform in log-space over [low, high + 1)
        v = math.floor(math.exp(math.log(low) + u * (math.log(high + 1.0) - math.log(low))))
        return int(min(max(v, low), high))

    def num(self, name, low, high, stream):
        return self.scalar(ScalarSpec(name, "num", low, high), stream)

    def lognum(self, name, low, high, stream):
        return self.scalar(ScalarSpec(name, "lognum", low, high), stream)

    def int_(self, name, low, high, stream):
        return self.scalar(ScalarSpec(name, "int", low, high), stream)

    def logint(self, name, low, high, stream):
        return self.scalar(ScalarSpec(name, "logint", low, high), stream)

    def categorical(self, name: str, c: int, stream: RngStream) -> int:
        """Index in [0, c) drawn from the name's shared weight vector."""
        if c < 1:
            raise ValueError("need at least one category")
        if name in self.categorical_weights:
            w = self.categorical_weights[name]
            if len(w) != c:
                raise ValueError(
                    f"categorical name {name!r} reused with c={c}, was {len(w)}"
                )
        else:
            w = random_weights(c, self, self.param_stream)
            self.categorical_weights[name] = w
        u = stream.uniform()
        return int(np.searchsorted(np.cumsum(w), u, side="right").clip(0, c - 1))


def new_sampler_context(stream: RngStream) -> CorrelatedSampler:
    return CorrelatedSampler(param_stream=stream.split("sampler-params"))


def random_weights(d: int, ctx: CorrelatedSampler, stream: RngStream) -> np.ndarray:
    """Positive weight vector with random power-law decay, normalized and shuffled."""
    if d < 1:
        raise ValueError("d must be >= 1")
    q = ctx.lognum("weights_decay", 0.1 / math.log(d + 1), 6.0, stream)
    sigma = ctx.lognum("weights_noise", 1e-4, 10.0, stream)
    m = np.arange(1, d + 1, dtype=float)
    w = m ** (-q) * np.exp(stream.normal(0.0, sigma, size=d))
    # Guard against underflow to an all-zero vector for extreme decays.
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        w = np.full(d, 1.0 / d)
    else:
        w = w / total
    w = np.maximum(w, 1e-300)
    w /= w.sum()
    stream.shuffle(w)
    return w
