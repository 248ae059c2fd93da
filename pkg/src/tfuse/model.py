"""Core data types shared by the samplers, baselines and the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class NumericError(RuntimeError):
    """A sampler update produced a non-finite value.

    Carries the name of the offending update step and, when raised from a full
    run, the iteration index.
    """

    def __init__(self, step: str, iteration: int | None = None):
        self.step = step
        self.iteration = iteration
        where = f" at iteration {iteration}" if iteration is not None else ""
        super().__init__(f"non-finite value in update step '{step}'{where}")


@dataclass(frozen=True)
class Dataset:
    """Observed sequence plus optional ground truth for evaluation."""

    y: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if y.ndim != 1 or y.size < 2:
            raise ValueError("y must be a 1-d sequence with n >= 2")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=float)
            object.__setattr__(self, "truth", truth)
            if truth.shape != y.shape:
                raise ValueError("truth must match y in length")
            if not np.all(np.isfinite(truth)):
                raise ValueError("truth must be finite")

    @property
    def n(self) -> int:
        return self.y.size

    def reversed(self) -> "Dataset":
        return Dataset(self.y[::-1].copy(), None if self.truth is None else self.truth[::-1].copy())


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be finite and > 0")


@dataclass(frozen=True)
class THyper:
    """Hyperparameters of the heavy-tail (scaled-t) fusion prior.

    The implied t law on a scaled difference has df = 2*a_t and
    scale = sqrt(b_t/a_t); lambda1 is the variance multiplier of the
    anchoring prior on the first (in scan order) coordinate.
    """

    a_t: float = 2.0
    b_t: float = 0.005
    a_sigma: float = 0.5
    b_sigma: float = 0.5
    lambda1: float = 5.0

    def __post_init__(self):
        _require_positive(a_t=self.a_t, b_t=self.b_t, a_sigma=self.a_sigma,
                          b_sigma=self.b_sigma, lambda1=self.lambda1)

    @property
    def df(self) -> float:
        return 2.0 * self.a_t

    @property
    def scale(self) -> float:
        return math.sqrt(self.b_t / self.a_t)

    tag = "t"


@dataclass(frozen=True)
class LaplaceHyper:
    """Hyperparameters of the double-exponential fusion prior.

    lam is the Laplace rate on a scaled difference (density ~ exp(-lam|x|)).
    """

    lam: float
    a_sigma: float = 0.5
    b_sigma: float = 0.5
    lambda1: float = 5.0

    def __post_init__(self):
        _require_positive(lam=self.lam, a_sigma=self.a_sigma,
                          b_sigma=self.b_sigma, lambda1=self.lambda1)

    tag = "laplace"


def default_laplace_rate(n: int) -> float:
    """Default Laplace rate sqrt(2 log n)."""
    return math.sqrt(2.0 * math.log(n))


@dataclass(frozen=True)
class DPHyper:
    """Dirichlet-process mixture hyperparameters: Gaussian base measure
    N(0, base_var), concentration alpha, inverse-gamma prior on sigma^2."""

    base_var: float = 5.0
    alpha: float = 0.1
    a_sigma: float = 0.5
    b_sigma: float = 0.5

    def __post_init__(self):
        _require_positive(base_var=self.base_var, alpha=self.alpha,
                          a_sigma=self.a_sigma, b_sigma=self.b_sigma)

    tag = "dp"


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int = 2000
    burnin: int = 1000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burnin < self.iterations:
            raise ValueError("burnin must satisfy 0 <= burnin < iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def retained(self) -> int:
        return -((self.burnin - self.iterations) // self.thin)  # ceil division


@dataclass
class ChainState:
    """Current Gibbs state: coordinate vector, latent difference scales
    (one per successive pair, in scan order) and the noise variance."""

    theta: np.ndarray
    lam: np.ndarray
    sigma2: float

    def validate(self, n: int | None = None):
        if n is not None and self.theta.size != n:
            raise ValueError(f"theta has length {self.theta.size}, expected {n}")
        if self.lam.size != self.theta.size - 1:
            raise ValueError("lam must have length n - 1")
        if not np.all(np.isfinite(self.theta)):
            raise NumericError("theta")
        if not (np.all(self.lam > 0) and np.all(np.isfinite(self.lam))):
            raise NumericError("lambda")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise NumericError("sigma2")
        return self

    def copy(self) -> "ChainState":
        return ChainState(self.theta.copy(), self.lam.copy(), self.sigma2)


@dataclass(frozen=True)
class PosteriorDraws:
    """Retained post-burn-in draws; rows index draws, columns coordinates.

    For the mixture sampler, `assignments` holds one row of cluster labels
    per retained draw (labels renumbered by first appearance within a draw).
    """

    theta: np.ndarray
    sigma2: np.ndarray
    meta: dict = field(default_factory=dict)
    assignments: np.ndarray | None = None

    def __post_init__(self):
        if self.theta.ndim != 2 or self.sigma2.ndim != 1:
            raise ValueError("theta must be draws x n, sigma2 draws")
        if self.theta.shape[0] != self.sigma2.size:
            raise ValueError("theta and sigma2 disagree on the number of draws")
        if not np.all(np.isfinite(self.theta)) or not np.all(np.isfinite(self.sigma2)):
            raise NumericError("retained draws")

    @property
    def n_draws(self) -> int:
        return self.theta.shape[0]

    @property
    def posterior_mean(self) -> np.ndarray:
        return self.theta.mean(axis=0)

    @property
    def sigma_hat(self) -> float:
        """Point estimate of the noise scale: posterior mean of sigma."""
        return float(np.sqrt(self.sigma2).mean())


ClusterDraws = PosteriorDraws

PriorSpec = THyper | LaplaceHyper
