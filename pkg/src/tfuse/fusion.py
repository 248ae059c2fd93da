"""Gibbs samplers for fusion priors on successive differences.

Both priors share the same normal/inverse-gamma conditional structure; they
differ only in the update of the latent difference scales. One sweep is a
systematic scan: the scale block, then sigma^2, then each coordinate in scan
order. The scan order is a permutation argument so the rank-routed clustering
samplers reuse the identical code path.
"""

from __future__ import annotations

import math
from dataclasses import asdict

import numpy as np

from .distributions import ScaledT, sample_inverse_gamma, sample_inverse_gaussian, scaled_t_log_density
from .model import ChainState, Dataset, LaplaceHyper, NumericError, PosteriorDraws, SamplerConfig, THyper
from .rng import RngStream

# below this, the inverse-Gaussian conditional mean of a Laplace scale is
# capped; the capped draw still concentrates 1/lambda near zero, matching the
# zero-difference limit
_MIN_ABS_DIFF = 1e-12


def init_chain(dataset: Dataset, rng: RngStream) -> ChainState:
    """Start at the data: theta = y, unit scales, sigma^2 = sample variance."""
    y = dataset.y
    sigma2 = max(float(np.var(y, ddof=1)), 1e-12)
    return ChainState(y.copy(), np.ones(y.size - 1), sigma2)


def theta_full_conditional(i: int, state: ChainState, dataset: Dataset,
                           lambda1: float) -> tuple[float, float]:
    """Mean and variance of the Gaussian full conditional of coordinate i
    (0-based, natural order).

    The first coordinate is anchored through a zero pseudo-neighbor with
    scale lambda1; the last has no right fusion term.
    """
    n = dataset.n
    if not 0 <= i < n:
        raise IndexError(f"coordinate index {i} out of range for n={n}")
    inv_left = 1.0 / lambda1 if i == 0 else 1.0 / state.lam[i - 1]
    theta_left = 0.0 if i == 0 else state.theta[i - 1]
    inv_right = 0.0 if i == n - 1 else 1.0 / state.lam[i]
    theta_right = 0.0 if i == n - 1 else state.theta[i + 1]
    denom = 1.0 + inv_left + inv_right
    nu = state.sigma2 / denom
    mu = (dataset.y[i] + theta_left * inv_left + theta_right * inv_right) / denom
    return mu, nu


def _draw_scales(d: np.ndarray, sigma2: float, prior, rng: RngStream) -> np.ndarray:
    """One block draw of the n-1 latent difference scales."""
    if isinstance(prior, THyper):
        rate = prior.b_t + d * d / (2.0 * sigma2)
        lam = sample_inverse_gamma(prior.a_t + 0.5, rate, rng, size=d.size)
    else:
        absd = np.maximum(np.abs(d), _MIN_ABS_DIFF)
        mean = prior.lam * math.sqrt(sigma2) / absd
        inv_lam = sample_inverse_gaussian(mean, prior.lam**2, rng, size=d.size)
        lam = 1.0 / inv_lam
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
        raise NumericError("lambda")
    return lam


def _draw_sigma2(y: np.ndarray, theta: np.ndarray, d: np.ndarray, lam: np.ndarray,
                 anchor_theta: float, prior, rng: RngStream) -> float:
    resid = y - theta
    rate = (prior.b_sigma
            + 0.5 * float(resid @ resid)
            + anchor_theta * anchor_theta / (2.0 * prior.lambda1)
            + 0.5 * float(np.sum(d * d / lam)))
    sigma2 = sample_inverse_gamma(prior.a_sigma + y.size, rate, rng)
    if not (sigma2 > 0.0 and math.isfinite(sigma2)):
        raise NumericError("sigma2")
    return sigma2


def _scan_theta(y_list, theta_list, lam: np.ndarray, sigma2: float, order_list,
                lambda1: float, rng: RngStream) -> None:
    """Update every coordinate in scan order, in place.

    Pure-python inner loop: the coordinate chain is sequential by nature, and
    scalar ndarray indexing would dominate the runtime.
    """
    n = len(theta_list)
    w = np.empty(n + 1)
    w[0] = 1.0 / lambda1
    np.divide(1.0, lam, out=w[1:n])
    w[n] = 0.0
    w_list = w.tolist()
    z = rng.gen.standard_normal(n).tolist()
    sqrt = math.sqrt
    last = n - 1
    for j in range(n):
        i = order_list[j]
        il = w_list[j]
        ir = w_list[j + 1]
        tl = theta_list[order_list[j - 1]] if j > 0 else 0.0
        tr = theta_list[order_list[j + 1]] if j < last else 0.0
        denom = 1.0 + il + ir
        theta_list[i] = (y_list[i] + tl * il + tr * ir) / denom + sqrt(sigma2 / denom) * z[j]


def _sweep(y: np.ndarray, y_list, theta_list, lam: np.ndarray, sigma2: float,
           order: np.ndarray, order_list, prior, rng: RngStream,
           update_scales: bool = True):
    """One full sweep: sigma^2, then the scale block, then the theta scan.

    sigma^2 is drawn first so that the very first scale update already sees a
    noise variance calibrated to the residuals; drawing the scales against
    the inflated initial sigma^2 compresses the jump/noise contrast and lets
    the opening theta scans capture boundary points on the wrong side of a
    jump, a mode the chain then takes thousands of sweeps to leave.
    Mutates theta_list; returns the new (lam, sigma2).
    """
    theta = np.asarray(theta_list)
    d = theta[order[1:]] - theta[order[:-1]]
    if update_scales:
        sigma2 = _draw_sigma2(y, theta, d, lam, theta_list[order_list[0]], prior, rng)
        lam = _draw_scales(d, sigma2, prior, rng)
    _scan_theta(y_list, theta_list, lam, sigma2, order_list, prior.lambda1, rng)
    return lam, sigma2


def _check_theta(theta_list) -> None:
    if not all(map(math.isfinite, theta_list)):
        raise NumericError("theta")


def t_fusion_sweep(state: ChainState, dataset: Dataset, hyper: THyper,
                   rng: RngStream, update_scales: bool = True) -> ChainState:
    """One sweep under the t prior: inverse-gamma scale updates."""
    return _order_sweep(state, dataset, hyper, rng, np.arange(dataset.n), update_scales)


def laplace_fusion_sweep(state: ChainState, dataset: Dataset, hyper: LaplaceHyper,
                         rng: RngStream, update_scales: bool = True) -> ChainState:
    """One sweep under the Laplace prior: inverse-Gaussian updates of the
    reciprocal scales."""
    return _order_sweep(state, dataset, hyper, rng, np.arange(dataset.n), update_scales)


def _order_sweep(state: ChainState, dataset: Dataset, prior, rng: RngStream,
                 order: np.ndarray, update_scales: bool = True) -> ChainState:
    theta_list = state.theta.tolist()
    lam, sigma2 = _sweep(dataset.y, dataset.y.tolist(), theta_list, state.lam,
                         state.sigma2, order, order.tolist(), prior, rng, update_scales)
    _check_theta(theta_list)
    return ChainState(np.array(theta_list), np.asarray(lam, dtype=float), sigma2)


def run_fusion_sampler(dataset: Dataset, prior: THyper | LaplaceHyper,
                       config: SamplerConfig, rng: RngStream | None = None,
                       init_state: ChainState | None = None,
                       update_scales: bool = True) -> PosteriorDraws:
    """Run the fusion Gibbs chain and keep post-burn-in thinned draws."""
    if rng is None:
        rng = RngStream(config.seed)
    order = np.arange(dataset.n)
    theta_draws, sigma2_draws = _run_chain(
        dataset, prior, config, rng, order, init_state=init_state, update_scales=update_scales)
    meta = {
        "prior": prior.tag,
        "hyper": asdict(prior),
        "config": asdict(config),
        "stream": [rng.seed, rng.stream_id],
    }
    return PosteriorDraws(theta_draws, sigma2_draws, meta)


def _run_chain(dataset: Dataset, prior, config: SamplerConfig, rng: RngStream,
               order: np.ndarray, r_update=None, r_due=None,
               init_state: ChainState | None = None, update_scales: bool = True,
               keep_assignments: bool = False):
    """Shared chain driver for the fusion and rank-routed samplers.

    `r_due(t)` marks iterations after which `r_update(theta)` replaces the
    scan order.
    """
    state = init_chain(dataset, rng) if init_state is None else init_state.copy()
    state.validate(dataset.n)
    y = dataset.y
    y_list = y.tolist()
    theta_list = state.theta.tolist()
    lam = state.lam
    sigma2 = state.sigma2
    order = np.asarray(order)
    order_list = order.tolist()

    kept_theta = []
    kept_sigma2 = []
    burnin, thin = config.burnin, config.thin
    for t in range(1, config.iterations + 1):
        try:
            lam, sigma2 = _sweep(y, y_list, theta_list, lam, sigma2, order,
                                 order_list, prior, rng, update_scales)
            _check_theta(theta_list)
        except NumericError as err:
            raise NumericError(err.step, iteration=t) from None
        if r_update is not None and r_due(t):
            order = r_update(np.asarray(theta_list))
            order_list = order.tolist()
        if t > burnin and (t - burnin - 1) % thin == 0:
            kept_theta.append(list(theta_list))
            kept_sigma2.append(sigma2)
    return np.asarray(kept_theta), np.asarray(kept_sigma2)


def conditional_neg_log_prior(grid, theta_prev: float, theta_next: float,
                              sigma: float, prior) -> np.ndarray:
    """Negative log of the conditional prior of a coordinate given its two
    neighbors, on a grid, shifted so the minimum is zero.

    `prior` may be a THyper, a ScaledT (direct df/scale control) or a
    LaplaceHyper.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    left = (grid - theta_prev) / sigma
    right = (theta_next - grid) / sigma
    if isinstance(prior, LaplaceHyper):
        curve = prior.lam * (np.abs(left) + np.abs(right))
    else:
        dist = ScaledT(prior.df, prior.scale) if isinstance(prior, THyper) else prior
        curve = -(scaled_t_log_density(left, dist) + scaled_t_log_density(right, dist))
    return curve - curve.min()
