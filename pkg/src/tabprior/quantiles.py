"""Full probability distributions built from 999 predicted quantiles.

Pipeline: crossing correction (sort / isotonic / none), exponential tail
fitting by log-space OLS on the outermost knots, then closed-form quantile
function, CDF, PDF, CRPS, mean, variance and inverse-transform sampling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import pava
from .rng import RngStream

__all__ = [
    "K_LEVELS",
    "default_levels",
    "enforce_monotone",
    "fit_tails",
    "QuantileDistribution",
    "make_validation_suite",
    "evaluate_suite",
    "SyntheticRegressionTask",
]

K_LEVELS = 999

BETA_MIN, BETA_MAX = 0.01, 100.0

# Sentinel used by log_pdf on zero-width (pooled) spline segments.
LOG_PDF_CAP = 1e9


def default_levels(k: int = K_LEVELS) -> np.ndarray:
    return np.arange(1, k + 1) / (k + 1)


def enforce_monotone(
    raw_q: np.ndarray,
    weights: np.ndarray | None = None,
    policy: str = "sort",
) -> np.ndarray:
    """Return a nondecreasing knot vector per the chosen crossing policy."""
    raw_q = np.asarray(raw_q, dtype=float)
    if policy == "none":
        return raw_q.copy()
    if policy == "sort":
        return np.sort(raw_q)
    if policy == "isotonic":
        return pava(raw_q, weights)
    raise ValueError(f"unknown crossing policy {policy!r}")


def fit_tails(
    q: np.ndarray, alphas: np.ndarray, k_tail: int = 20
) -> tuple[float, float]:
    """Exponential tail scales from log-space OLS on the outermost knots."""
    k = len(q)
    if not 2 <= k_tail <= k // 2:
        raise ValueError("k_tail out of range")
    xl = np.log(alphas[:k_tail])
    yl = q[:k_tail]
    beta_l = np.cov(yl, xl, bias=True)[0, 1] / np.var(xl)
    xr = np.log(1.0 - alphas[-k_tail:])
    yr = q[-k_tail:]
    beta_r = -np.cov(yr, xr, bias=True)[0, 1] / np.var(xr)
    clamp = lambda b: float(np.clip(b, BETA_MIN, BETA_MAX))
    return clamp(beta_l), clamp(beta_r)


@dataclass
class QuantileDistribution:
    """Piecewise-linear quantile knots with exponential tails.

    Immutable after construction; all queries accept scalars or arrays.
    """

    alphas: np.ndarray
    q: np.ndarray
    beta_l: float
    beta_r: float

    @classmethod
    def from_quantiles(
        cls,
        raw_q: np.ndarray,
        alphas: np.ndarray | None = None,
        policy: str = "sort",
        weights: np.ndarray | None = None,
        k_tail: int = 20,
    ) -> "QuantileDistribution":
        raw_q = np.asarray(raw_q, dtype=float)
        if alphas is None:
            alphas = default_levels(len(raw_q))
        alphas = np.asarray(alphas, dtype=float)
        if raw_q.shape != alphas.shape:
            raise ValueError("quantiles and levels must have equal length")
        q = enforce_monotone(raw_q, weights, policy)
        beta_l, beta_r = fit_tails(q, alphas, k_tail)
        return cls(alphas, q, beta_l, beta_r)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.slopes = np.diff(self.q) / np.diff(self.alphas)

    @property
    def alpha_l(self) -> float:
        return float(self.alphas[0])

    @property
    def alpha_r(self) -> float:
        return float(self.alphas[-1])

    @property
    def q_l(self) -> float:
        return float(self.q[0])

    @property
    def q_r(self) -> float:
        return float(self.q[-1])

    # -- quantile / CDF / PDF ------------------------------------------------

    def quantile(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if np.any((alpha <= 0.0) | (alpha >= 1.0)):
            raise ValueError("alpha must lie in (0, 1)")
        out = np.interp(alpha, self.alphas, self.q)
        left = alpha < self.alpha_l
        right = alpha > self.alpha_r
        out = np.where(left, self.q_l + self.beta_l * np.log(alpha / self.alpha_l), out)
        out = np.where(
            right,
            self.q_r - self.beta_r * np.log((1.0 - alpha) / (1.0 - self.alpha_r)),
            out,
        )
        return out if out.ndim else float(out)

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        # side="left" assigns the left endpoint level at jumps caused by
        # pooled (duplicate) knots.
        j = np.clip(np.searchsorted(self.q, z, side="left"), 0, len(self.q) - 1)
        jm = np.maximum(j - 1, 0)
        width = self.q[j] - self.q[jm]
        frac = np.where(width > 0, (z - self.q[jm]) / np.where(width > 0, width, 1.0), 0.0)
        at_knot = self.q[j] == z
        out = np.where(
            at_knot,
            self.alphas[j],
            self.alphas[jm] + frac * (self.alphas[j] - self.alphas[jm]),
        )
        left = z < self.q_l
        right = z > self.q_r
        with np.errstate(over="ignore"):
            out = np.where(
                left, self.alpha_l * np.exp((z - self.q_l) / self.beta_l), out
            )
            out = np.where(
                right,
                1.0 - (1.0 - self.alpha_r) * np.exp(-(z - self.q_r) / self.beta_r),
                out,
            )
        return out if out.ndim else float(out)

    def _dq_dalpha(self, alpha):
        """dQ/dalpha evaluated at alpha (vectorized)."""
        alpha = np.asarray(alpha, dtype=float)
        idx = np.clip(np.searchsorted(self.alphas, alpha, side="right") - 1, 0, len(self.slopes) - 1)
        out = self.slopes[idx]
        with np.errstate(divide="ignore"):
            out = np.where(alpha < self.alpha_l, self.beta_l / alpha, out)
            out = np.where(alpha >= self.alpha_r, self.beta_r / (1.0 - alpha), out)
        return out

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        deriv = self._dq_dalpha(self.cdf(z))
        with np.errstate(divide="ignore"):
            out = np.where(deriv > 0.0, 1.0 / np.where(deriv > 0, deriv, 1.0), np.inf)
        return out if out.ndim else float(out)

    def log_pdf(self, z):
        z = np.asarray(z, dtype=float)
        deriv = self._dq_dalpha(self.cdf(z))
        out = np.where(deriv > 0.0, -np.log(np.where(deriv > 0, deriv, 1.0)), LOG_PDF_CAP)
        return out if out.ndim else float(out)

    # -- CRPS ----------------------------------------------------------------

    def crps(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.array([self._crps_one(float(v)) for v in z])
        return float(out[0]) if scalar else out

    def _crps_one(self, z: float) -> float:
        fz = self.cdf(z)
        a, q, m = self.alphas, self.q, self.slopes
        a0, a1 = a[:-1], a[1:]
        q0 = q[:-1]
        r = np.clip(fz, a0, a1)
        # Spline: int 2*alpha*(z - Q) over [a0, r] plus int 2*(1-alpha)*(Q - z)
        # over [r, a1], both with Q = q0 + m*(alpha - a0).
        i1 = (z - q0) * (r**2 - a0**2) - 2.0 * m * (
            r**3 / 3.0 - a0 * r**2 / 2.0 + a0**3 / 6.0
        )
        c = q0 - m * a0 - z

        def anti2(x):
            return c * (x - x**2 / 2.0) + m * (x**2 / 2.0 - x**3 / 3.0)

        i2 = 2.0 * (anti2(a1) - anti2(r))
        total = float((i1 + i2).sum())

        # Left exponential tail.
        al, bl = self.alpha_l, self.beta_l
        b_l = self.q_l - bl * math.log(al)
        a_tilde = min(fz, al)
        left = (z - b_l) * (al**2 - 2.0 * al + 2.0 * a_tilde) + al**2 * bl * (
            -math.log(al) + 0.5
        )
        if z < self.q_l:
            left += 2.0 * al * bl * (math.log(al) - 1.0) + 2.0 * a_tilde * (
                -z + b_l + bl
            )
        total += left

        # Right exponential tail.
        ar, br = self.alpha_r, self.beta_r
        a_r = -br
        b_r = self.q_r + br * math.log(1.0 - ar)
        a_tilde = max(fz, ar)
        right = (z - b_r) * (-1.0 - ar**2 + 2.0 * a_tilde) + a_r * (
            -((1.0 + ar) ** 2) / 2.0 + (ar**2 - 1.0) * math.log(1.0 - ar) + 2.0 * a_tilde
        )
        if z > self.q_r:
            right += 2.0 * (1.0 - a_tilde) * (z - b_r)
        else:
            right += 2.0 * a_r * (1.0 - ar) * math.log(1.0 - ar)
        total += right
        return total

    # -- moments & sampling ----------------------------------------------------

    def mean(self) -> float:
        a, q = self.alphas, self.q
        spline = float(((q[:-1] + q[1:]) * np.diff(a) / 2.0).sum())
        left = self.alpha_l * (self.q_l - self.beta_l)
        right = (1.0 - self.alpha_r) * (self.q_r + self.beta_r)
        return left + spline + right

    def variance(self) -> float:
        a, q = self.alphas, self.q
        spline = float(
            (np.diff(a) * (q[:-1] ** 2 + q[:-1] * q[1:] + q[1:] ** 2) / 3.0).sum()
        )
        left = self.alpha_l * (
            self.q_l**2 - 2.0 * self.beta_l * self.q_l + 2.0 * self.beta_l**2
        )
        right = (1.0 - self.alpha_r) * (
            self.q_r**2 + 2.0 * self.beta_r * self.q_r + 2.0 * self.beta_r**2
        )
        return left + spline + right - self.mean() ** 2

    def sample(self, stream: RngStream, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        u = stream.uniform(size=n)
        u = np.clip(u, 1e-15, 1.0 - 1e-15)
        return np.asarray(self.quantile(u))

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "knots": self.q.tolist(),
                "beta_l": self.beta_l,
                "beta_r": self.beta_r,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QuantileDistribution":
        obj = json.loads(text)
        knots = np.asarray(obj["knots"], dtype=float)
        return cls(default_levels(len(knots)), knots, obj["beta_l"], obj["beta_r"])


# ---------------------------------------------------------------------------
# Synthetic validation tasks with exact ground-truth conditionals
# ---------------------------------------------------------------------------


@dataclass
class SyntheticRegressionTask:
    name: str
    sample_x: callable
    sample_y: callable  # (x, stream) -> y
    true_cdf: callable  # (x, y) -> F(y | x)
    true_pdf: callable
    true_quantile: callable  # (x, alpha) -> Q(alpha | x)

    def generate(self, n: int, stream: RngStream):
        x = self.sample_x(n, stream)
        y = self.sample_y(x, stream)
        return x, y


def _norm_cdf(z):
    from scipy.stats import norm

    return norm.cdf(z)


def make_validation_suite() -> list[SyntheticRegressionTask]:
    """Four regression tasks with known conditional distributions."""
    from scipy.optimize import brentq
    from scipy.stats import norm

    def gaussian_task(name, mean_fn, std_fn):
        return SyntheticRegressionTask(
            name=name,
            sample_x=lambda n, s: s.uniform(-3.0, 3.0, n),
            sample_y=lambda x, s: mean_fn(x) + std_fn(x) * s.standard_normal(len(np.atleast_1d(x))),
            true_cdf=lambda x, y: norm.cdf(y, loc=mean_fn(x), scale=std_fn(x)),
            true_pdf=lambda x, y: norm.pdf(y, loc=mean_fn(x), scale=std_fn(x)),
            true_quantile=lambda x, alpha: norm.ppf(alpha, loc=mean_fn(x), scale=std_fn(x)),
        )

    quad = gaussian_task(
        "quadratic_homoscedastic",
        lambda x: 0.15 * np.asarray(x) ** 2 - 0.5,
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.25),
    )
    sinus = gaussian_task(
        "sinusoidal_heteroscedastic",
        lambda x: np.sin(2.0 * np.asarray(x)) + 0.2 * np.asarray(x),
        lambda x: 0.12 + 0.1 * np.abs(np.asarray(x)),
    )
    step = gaussian_task(
        "step",
        lambda x: np.where(np.asarray(x) < 0, -1.0, 1.0),
        lambda x: np.full_like(np.asarray(x, dtype=float), 0.3),
    )

    w, s1, s2 = 0.1, 0.2, 0.8

    def mix_cdf(x, y):
        mu = 0.3 * np.asarray(x)
        return (1 - w) * norm.cdf(y, mu, s1) + w * norm.cdf(y, mu, s2)

    def mix_pdf(x, y):
        mu = 0.3 * np.asarray(x)
        return (1 - w) * norm.pdf(y, mu, s1) + w * norm.pdf(y, mu, s2)

    def mix_quantile(x, alpha):
        mu = float(np.asarray(x))
        mu = 0.3 * mu

        def one(a):
            lo = mu + min(s1, s2) * norm.ppf(a) - 5 * s2
            hi = mu + max(s1, s2) * norm.ppf(a) + 5 * s2
            return brentq(lambda y: mix_cdf(x, y) - a, lo - 10, hi + 10)

        alpha = np.asarray(alpha, dtype=float)
        if alpha.ndim == 0:
            return one(float(alpha))
        return np.array([one(a) for a in alpha])

    def mix_sample(x, stream):
        x = np.atleast_1d(x)
        mu = 0.3 * x
        outlier = stream.uniform(size=len(x)) < w
        scale = np.where(outlier, s2, s1)
        return mu + scale * stream.standard_normal(len(x))

    heavy = SyntheticRegressionTask(
        name="linear_heavy_tailed",
        sample_x=lambda n, s: s.uniform(-3.0, 3.0, n),
        sample_y=mix_sample,
        true_cdf=mix_cdf,
        true_pdf=mix_pdf,
        true_quantile=mix_quantile,
    )
    return [quad, sinus, step, heavy]


def evaluate_suite(
    n_x: int = 5, policy: str = "sort", n_levels: int = K_LEVELS
) -> list[dict]:
    """Reconstruction quality of the quantile machinery on the suite tasks.

    For each task and a grid of conditioning points x, the exact conditional
    quantiles at the standard levels are fed to ``from_quantiles`` and the
    resulting CDF/PDF are compared with the ground truth.  Reported per task:
    worst-case CDF sup-distance and PDF L1 distance over the x grid.
    """
    levels = default_levels(n_levels)
    report = []
    for task in make_validation_suite():
        xs = np.linspace(-2.5, 2.5, n_x)
        sup_cdf, l1_pdf = 0.0, 0.0
        for x in xs:
            true_q = np.asarray(task.true_quantile(x, levels), dtype=float)
            dist = QuantileDistribution.from_quantiles(true_q, levels, policy=policy)
            zs = np.linspace(true_q[0], true_q[-1], 2001)
            sup_cdf = max(sup_cdf, float(np.abs(dist.cdf(zs) - task.true_cdf(x, zs)).max()))
            l1 = np.trapezoid(np.abs(dist.pdf(zs) - task.true_pdf(x, zs)), zs)
            l1_pdf = max(l1_pdf, float(l1))
        report.append({"task": task.name, "sup_cdf_distance": sup_cdf, "pdf_l1_distance": l1_pdf})
    return report
