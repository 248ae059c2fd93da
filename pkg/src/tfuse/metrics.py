"""Evaluation statistics: estimation errors, adjacency recovery, and
within/between block separation measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import student_t_quantile
from .model import LaplaceHyper, PosteriorDraws, THyper


def adjacency_true(theta_star) -> np.ndarray:
    """Exact-equality adjacency: omega_ij = 1 iff theta_i == theta_j."""
    t = np.asarray(theta_star, dtype=float)
    return (t[:, None] == t[None, :]).astype(np.int8)


def bayes_threshold(prior: THyper | LaplaceHyper, n: int) -> float:
    """Prior-calibrated merge threshold: the (1 - 1/2n) quantile of the prior
    on a scaled difference (t), or log(n)/rate (Laplace)."""
    if isinstance(prior, THyper):
        return prior.scale * student_t_quantile(2.0 * prior.a_t, 1.0 - 1.0 / (2.0 * n))
    if isinstance(prior, LaplaceHyper):
        return math.log(n) / prior.lam
    raise ValueError(f"unknown prior type {type(prior).__name__!r}")


def adjacency_at_threshold(theta_hat, sigma_hat: float, threshold: float) -> np.ndarray:
    if sigma_hat <= 0:
        raise ValueError("sigma_hat must be > 0")
    t = np.asarray(theta_hat, dtype=float)
    return (np.abs(t[:, None] - t[None, :]) / sigma_hat <= threshold).astype(np.int8)


def adjacency_bayes(theta_hat, sigma_hat: float, prior: THyper | LaplaceHyper,
                    n: int) -> np.ndarray:
    return adjacency_at_threshold(theta_hat, sigma_hat, bayes_threshold(prior, n))


def r_statistic(adj_hat, adj_true) -> float:
    """Entrywise L1 distance between adjacency matrices (ordered pairs,
    diagonal included)."""
    a = np.asarray(adj_hat)
    b = np.asarray(adj_true)
    if a.shape != b.shape:
        raise ValueError(f"adjacency shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a.astype(float) - b.astype(float)).sum())


def _pair_differences(theta_hat, adj_true, within: bool) -> np.ndarray:
    t = np.asarray(theta_hat, dtype=float)
    adj = np.asarray(adj_true).astype(bool)
    if adj.shape != (t.size, t.size):
        raise ValueError("adjacency does not match theta_hat")
    iu = np.triu_indices(t.size, k=1)
    mask = adj[iu] if within else ~adj[iu]
    if not mask.any():
        kind = "within" if within else "between"
        raise ValueError(f"no {kind}-block pairs: statistic undefined")
    return np.abs(t[iu[0]][mask] - t[iu[1]][mask])


def w_statistic(theta_hat, adj_true) -> float:
    """Average |theta_i - theta_j| over distinct true within-block pairs."""
    return float(_pair_differences(theta_hat, adj_true, within=True).mean())


def b_statistic(theta_hat, adj_true) -> float:
    """Minimum |theta_i - theta_j| over true between-block pairs."""
    return float(_pair_differences(theta_hat, adj_true, within=False).min())


def b_tilde_statistic(theta_hat, adj_true, q: float = 0.10) -> float:
    """Lower empirical q-quantile (order statistic ceil(q*m)) of the
    between-pair differences."""
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    diffs = np.sort(_pair_differences(theta_hat, adj_true, within=False))
    k = math.ceil(q * diffs.size)
    return float(diffs[k - 1])


@dataclass(frozen=True)
class SelectionConfig:
    """Discretization rule for posterior jump detection: a difference is a
    jump when |theta_i - theta_{i-1}| / sigma >= epsilon_n / n."""

    n: int
    epsilon_n: float

    def __post_init__(self):
        if self.epsilon_n <= 0:
            raise ValueError("epsilon_n must be > 0")

    @classmethod
    def default(cls, n: int) -> "SelectionConfig":
        return cls(n, math.sqrt(math.log(n) / n))

    @property
    def threshold(self) -> float:
        return self.epsilon_n / self.n


def selection_set(theta, sigma: float, cfg: SelectionConfig) -> np.ndarray:
    """Detected jump positions: 0-based indices i >= 1 where the scaled
    difference to position i-1 meets the threshold."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    t = np.asarray(theta, dtype=float)
    d = np.abs(np.diff(t)) / sigma
    return np.nonzero(d >= cfg.threshold)[0] + 1


def errors_and_posterior(estimate, theta_star):
    """(L2 error, L1 error, posterior mean of squared L2 error).

    `estimate` is either a point estimate vector or PosteriorDraws, in which
    case the point errors are those of the posterior mean and the third
    element averages ||draw - truth||^2 over retained draws (None otherwise).
    """
    truth = np.asarray(theta_star, dtype=float)
    post_mean_sq = None
    if isinstance(estimate, PosteriorDraws):
        if estimate.theta.shape[1] != truth.size:
            raise ValueError("draws and truth disagree on dimension")
        dev = estimate.theta - truth[None, :]
        post_mean_sq = float(np.mean(np.sum(dev * dev, axis=1)))
        point = estimate.posterior_mean
    else:
        point = np.asarray(estimate, dtype=float)
        if point.shape != truth.shape:
            raise ValueError("estimate and truth disagree on dimension")
    diff = point - truth
    l2 = float(np.sqrt(np.sum(diff * diff)))
    l1 = float(np.sum(np.abs(diff)))
    return l2, l1, post_mean_sq


DEFAULT_QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class PosteriorSummary:
    """Per-coordinate posterior mean and empirical quantiles (rows are
    coordinates, quantile columns follow `probs`)."""

    mean: np.ndarray
    quantiles: np.ndarray
    probs: tuple


def posterior_summary(draws: PosteriorDraws,
                      quantiles=DEFAULT_QUANTILES) -> PosteriorSummary:
    if draws.n_draws == 0:
        raise ValueError("no retained draws to summarize")
    probs = tuple(float(q) for q in quantiles)
    qs = np.quantile(draws.theta, probs, axis=0).T
    return PosteriorSummary(draws.posterior_mean, qs, probs)


@dataclass(frozen=True)
class MetricReport:
    """One method's metrics on one dataset; None marks a metric the method
    does not define (no draws, or no adjacency rule)."""

    l2: float
    l1: float
    post_mean_sq_l2: float | None
    w: float
    b: float
    b_tilde: float
    r: float | None

    FIELDS = ("l2", "l1", "post_mean_sq_l2", "w", "b", "b_tilde", "r")

    def values(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


def evaluate_estimate(truth, theta_hat, draws: PosteriorDraws | None = None,
                      adj_hat: np.ndarray | None = None,
                      b_tilde_q: float = 0.10) -> MetricReport:
    """Assemble the full metric report for one fitted method."""
    source = draws if draws is not None else theta_hat
    l2, l1, pmsl2 = errors_and_posterior(source, truth)
    adj_t = adjacency_true(truth)
    point = draws.posterior_mean if draws is not None else np.asarray(theta_hat, float)
    return MetricReport(
        l2=l2, l1=l1, post_mean_sq_l2=pmsl2,
        w=w_statistic(point, adj_t),
        b=b_statistic(point, adj_t),
        b_tilde=b_tilde_statistic(point, adj_t, b_tilde_q),
        r=None if adj_hat is None else r_statistic(adj_hat, adj_t),
    )
