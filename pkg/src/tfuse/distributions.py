"""Random variates and special-function evaluations used by the Gibbs samplers.

Conventions:
  * inverse-gamma(shape a, rate b) has density proportional to
    x^(-a-1) exp(-b/x); its mean is b/(a-1) for a > 1.
  * inverse-Gaussian(mean a, shape b) has density proportional to
    x^(-3/2) exp(-b (x-a)^2 / (2 a^2 x)).
  * the scaled Student-t with df degrees of freedom and scale s is the law of
    s*T with T standard t(df).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .rng import RngStream


def sample_inverse_gamma(shape, rate, rng: RngStream, size=None):
    """Draw from inverse-gamma(shape, rate).

    Implemented as rate / Gamma(shape, 1); the gamma variates come from the
    generator's squeeze method (Marsaglia-Tsang, with boosting below shape 1),
    which is exact and rejection-bounded.
    """
    shape_a = np.asarray(shape, dtype=float)
    rate_a = np.asarray(rate, dtype=float)
    if np.any(shape_a <= 0) or np.any(~np.isfinite(shape_a)):
        raise ValueError("inverse-gamma shape must be finite and > 0")
    if np.any(rate_a <= 0) or np.any(~np.isfinite(rate_a)):
        raise ValueError("inverse-gamma rate must be finite and > 0")
    g = rng.gen.standard_gamma(shape_a, size=size)
    out = rate_a / g
    return float(out) if np.ndim(out) == 0 else out


def sample_inverse_gaussian(mean, shape, rng: RngStream, size=None):
    """Draw from inverse-Gaussian(mean, shape) by the Michael-Schucany-Haas
    transformation: one chi-square root plus one uniform per draw, no
    rejection loop."""
    mu = np.asarray(mean, dtype=float)
    lam = np.asarray(shape, dtype=float)
    if np.any(mu <= 0) or np.any(~np.isfinite(mu)):
        raise ValueError("inverse-Gaussian mean must be finite and > 0")
    if np.any(lam <= 0) or np.any(~np.isfinite(lam)):
        raise ValueError("inverse-Gaussian shape must be finite and > 0")
    if size is None:
        size = np.broadcast(mu, lam).shape
    v = rng.gen.standard_normal(size) ** 2
    w = mu * v
    # smaller root of the quadratic in x/mu
    x1 = mu + mu / (2.0 * lam) * (w - np.sqrt(w * (4.0 * lam + w)))
    u = rng.gen.uniform(size=np.shape(x1))
    out = np.where(u <= mu / (mu + x1), x1, mu * mu / x1)
    return float(out) if np.ndim(out) == 0 else out


def student_t_cdf(x, df: float):
    """CDF of the standard t(df) via the regularized incomplete beta."""
    if df <= 0:
        raise ValueError("df must be > 0")
    x_a = np.asarray(x, dtype=float)
    ib = 0.5 * betainc(df / 2.0, 0.5, df / (df + x_a * x_a))
    out = np.where(x_a >= 0, 1.0 - ib, ib)
    return float(out) if np.ndim(out) == 0 else out


def _student_t_log_pdf(x: float, df: float) -> float:
    return (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
        - (df + 1.0) / 2.0 * math.log1p(x * x / df)
    )


def student_t_quantile(df: float, p: float) -> float:
    """Quantile of the standard t(df): bracketed bisection on the incomplete-
    beta CDF, then Newton steps. Accurate to well below 1e-10 absolute."""
    if df <= 0:
        raise ValueError("df must be > 0")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly inside (0, 1)")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -student_t_quantile(df, 1.0 - p)

    lo, hi = 0.0, 1.0
    while student_t_cdf(hi, df) < p:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ValueError("quantile bracket overflow")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * max(1.0, lo):
            break
    x = 0.5 * (lo + hi)
    for _ in range(4):
        f = student_t_cdf(x, df) - p
        step = f / math.exp(_student_t_log_pdf(x, df))
        x -= step
        if abs(step) < 1e-14 * max(1.0, abs(x)):
            break
    return x


@dataclass(frozen=True)
class ScaledT:
    """Student-t law with df degrees of freedom, rescaled by `scale`."""

    df: float
    scale: float

    def __post_init__(self):
        if not (self.df > 0 and math.isfinite(self.df)):
            raise ValueError("df must be finite and > 0")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("scale must be finite and > 0")


def scaled_t_log_density(x, dist: ScaledT):
    """Log density of the scaled t at x (vectorized over x)."""
    x_a = np.asarray(x, dtype=float)
    df, s = dist.df, dist.scale
    z2 = (x_a / s) ** 2
    out = (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
        - math.log(s)
        - (df + 1.0) / 2.0 * np.log1p(z2 / df)
    )
    return float(out) if np.ndim(out) == 0 else out


def solve_tune_scale(n: int, df: float) -> tuple[float, float]:
    """Pick the t scale so a scaled-t difference exceeds sqrt(log(n)/n) in
    absolute value with probability exactly 1/n.

    Returns (scale, rate) where rate is the inverse-gamma rate hyperparameter
    matching that scale at the given df (shape df/2).
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    threshold = math.sqrt(math.log(n) / n)
    s = threshold / student_t_quantile(df, 1.0 - 1.0 / (2.0 * n))
    b_t = (df / 2.0) * s * s
    return s, b_t
