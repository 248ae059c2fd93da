"""Clustering by shrinkage on rank-ordered differences, plus a Dirichlet
process mixture baseline.

The rank samplers reuse the fusion sweep with all neighbor relations routed
through a working permutation: either the pilot rank of the data (fixed) or
the rank statistic of the current draw, refreshed at a configurable cadence
(adaptive). The DP baseline is a collapsed conjugate Gibbs sampler over
cluster assignments with a Gaussian base measure and one shared noise
variance.
"""

from __future__ import annotations

import math
from dataclasses import asdict

import numpy as np

from .fusion import _order_sweep, _run_chain
from .model import (ChainState, ClusterDraws, Dataset, DPHyper, NumericError,
                    SamplerConfig, THyper)
from .rng import RngStream


def pilot_rank(y) -> np.ndarray:
    """Permutation r with y[r[0]] <= y[r[1]] <= ...; stable on ties."""
    return np.argsort(np.asarray(y), kind="stable")


rank_update = pilot_rank  # the r-refresh is the same rank statistic, applied to theta


def _check_permutation(r: np.ndarray, n: int) -> np.ndarray:
    r = np.asarray(r)
    if r.shape != (n,) or not np.array_equal(np.sort(r), np.arange(n)):
        raise ValueError("r must be a permutation of 0..n-1")
    return r


def fixed_rank_sweep(state: ChainState, dataset: Dataset, r: np.ndarray,
                     hyper: THyper, rng: RngStream,
                     update_scales: bool = True) -> ChainState:
    """One t-prior sweep with neighbors, scales and the anchor routed
    through the permutation r."""
    return _order_sweep(state, dataset, hyper, rng,
                        _check_permutation(r, dataset.n), update_scales)


def init_cluster_chain(dataset: Dataset) -> ChainState:
    """Structureless start for rank-sampler experiments: constant theta at
    the grand mean, unit scales, sigma^2 = sample variance.

    Use this to probe posterior concentration on homogeneous data. Starting
    at theta = y seeds the chain inside the sorted-data ramp (every
    coordinate pinned to its own observation under a monotone neighbor
    graph), which rank refreshes cannot leave, so a run started there says
    nothing about whether the posterior itself concentrates. The default run
    init stays at theta = y, which preserves local structure on genuinely
    clustered data.
    """
    y = dataset.y
    sigma2 = max(float(np.var(y, ddof=1)), 1e-12)
    return ChainState(np.full(y.size, float(y.mean())), np.ones(y.size - 1), sigma2)


def adaptive_cluster_run(dataset: Dataset, hyper: THyper, config: SamplerConfig,
                         r_period: int | None = 20, r_start: int | None = None,
                         rng: RngStream | None = None,
                         init_state: ChainState | None = None) -> ClusterDraws:
    """Rank-routed t sampler started at the pilot rank of the data.

    Every `r_period` iterations from iteration `r_start` on (default: after
    burn-in) the working permutation is replaced by the rank statistic of the
    current draw. `r_period=None` never updates, which is the fixed-rank
    sampler.
    """
    if rng is None:
        rng = RngStream(config.seed)
    if r_start is None:
        r_start = config.burnin
    if r_start > config.iterations:
        raise ValueError("r_start must not exceed iterations")
    if r_period is not None and r_period < 1:
        raise ValueError("r_period must be a positive integer (or None)")

    n = dataset.n
    if r_period is None:
        r_update = r_due = None
    else:
        def r_due(t: int) -> bool:
            return t >= r_start and (t - r_start) % r_period == 0

        def r_update(theta: np.ndarray) -> np.ndarray:
            return _check_permutation(rank_update(theta), n)

    theta_draws, sigma2_draws = _run_chain(
        dataset, hyper, config, rng, pilot_rank(dataset.y),
        r_update=r_update, r_due=r_due, init_state=init_state)
    meta = {
        "prior": "t-rank",
        "hyper": asdict(hyper),
        "config": asdict(config),
        "r_period": r_period,
        "r_start": r_start,
        "stream": [rng.seed, rng.stream_id],
    }
    return ClusterDraws(theta_draws, sigma2_draws, meta)


def fixed_rank_run(dataset: Dataset, hyper: THyper, config: SamplerConfig,
                   rng: RngStream | None = None,
                   init_state: ChainState | None = None) -> ClusterDraws:
    """Rank sampler with the pilot permutation held fixed for the whole run."""
    return adaptive_cluster_run(dataset, hyper, config, r_period=None, rng=rng,
                                init_state=init_state)


def crp_partition(n: int, alpha: float, rng: RngStream) -> np.ndarray:
    """One partition draw from the Chinese restaurant process."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    labels = [0] * n
    counts = [1]
    u = rng.gen.uniform(size=n)
    for i in range(1, n):
        r = u[i] * (i + alpha)
        if r >= i:
            labels[i] = len(counts)
            counts.append(1)
        else:
            k = 0
            acc = counts[0]
            while acc <= r:
                k += 1
                acc += counts[k]
            labels[i] = k
            counts[k] += 1
    return np.asarray(labels)


def _canonical_labels(labels) -> list[int]:
    """Renumber labels by order of first appearance."""
    seen = {}
    out = []
    for c in labels:
        if c not in seen:
            seen[c] = len(seen)
        out.append(seen[c])
    return out


def dp_mixture_run(dataset: Dataset, hyper: DPHyper, config: SamplerConfig,
                   rng: RngStream | None = None,
                   likelihood_on: bool = True) -> ClusterDraws:
    """Collapsed Gibbs for the DP mixture: assignments marginal over cluster
    means, then conjugate draws of the means and the shared sigma^2.

    With `likelihood_on=False` the data terms are dropped everywhere, so the
    chain targets the prior (a sampler correctness hook).
    """
    if rng is None:
        rng = RngStream(config.seed)
    y = dataset.y.tolist()
    n = dataset.n
    alpha, base_var = hyper.alpha, hyper.base_var

    # one singleton cluster per point: merging down is far easier for the
    # collapsed sampler than splitting a big cluster whose spread has been
    # absorbed into sigma^2
    labels = list(range(n))
    counts = [1] * n
    sums = list(y)
    sigma2 = max(float(np.var(dataset.y, ddof=1)), 1e-12)

    log, sqrt, exp = math.log, math.sqrt, math.exp
    log_alpha = log(alpha)
    kept_theta, kept_sigma2, kept_labels = [], [], []
    burnin, thin = config.burnin, config.thin

    for t in range(1, config.iterations + 1):
        u_assign = rng.gen.uniform(size=n).tolist()
        for i in range(n):
            yi = y[i]
            k_old = labels[i]
            counts[k_old] -= 1
            sums[k_old] -= yi
            if counts[k_old] == 0:
                last = len(counts) - 1
                if k_old != last:
                    counts[k_old] = counts[last]
                    sums[k_old] = sums[last]
                    for j in range(n):
                        if labels[j] == last:
                            labels[j] = k_old
                counts.pop()
                sums.pop()

            k_active = len(counts)
            lw = [0.0] * (k_active + 1)
            if likelihood_on:
                for k in range(k_active):
                    prec = 1.0 / base_var + counts[k] / sigma2
                    m = sums[k] / sigma2 / prec
                    v = 1.0 / prec + sigma2
                    lw[k] = log(counts[k]) - 0.5 * log(v) - 0.5 * (yi - m) ** 2 / v
                v0 = base_var + sigma2
                lw[k_active] = log_alpha - 0.5 * log(v0) - 0.5 * yi * yi / v0
            else:
                for k in range(k_active):
                    lw[k] = log(counts[k])
                lw[k_active] = log_alpha
            top = max(lw)
            w = [exp(v - top) for v in lw]
            r = u_assign[i] * sum(w)
            k_new = 0
            acc = w[0]
            while acc <= r and k_new < k_active:
                k_new += 1
                acc += w[k_new]
            labels[i] = k_new
            if k_new == k_active:
                counts.append(1)
                sums.append(yi)
            else:
                counts[k_new] += 1
                sums[k_new] += yi

        # conjugate cluster-mean draws, then the pooled sigma^2 residual update
        k_active = len(counts)
        z = rng.gen.standard_normal(k_active).tolist()
        phi = [0.0] * k_active
        for k in range(k_active):
            if likelihood_on:
                prec = 1.0 / base_var + counts[k] / sigma2
                phi[k] = sums[k] / sigma2 / prec + z[k] / sqrt(prec)
            else:
                phi[k] = sqrt(base_var) * z[k]
        theta = [phi[c] for c in labels]
        if likelihood_on:
            rss = 0.0
            for i in range(n):
                rss += (y[i] - theta[i]) ** 2
            rate = hyper.b_sigma + 0.5 * rss
        else:
            rate = hyper.b_sigma
        shape = hyper.a_sigma + (0.5 * n if likelihood_on else 0.0)
        sigma2 = rate / float(rng.gen.standard_gamma(shape))
        if not (sigma2 > 0.0 and math.isfinite(sigma2)):
            raise NumericError("sigma2", iteration=t)
        if not all(map(math.isfinite, theta)):
            raise NumericError("theta", iteration=t)

        if t > burnin and (t - burnin - 1) % thin == 0:
            kept_theta.append(theta)
            kept_sigma2.append(sigma2)
            kept_labels.append(_canonical_labels(labels))

    meta = {
        "prior": "dp",
        "hyper": asdict(hyper),
        "config": asdict(config),
        "likelihood_on": likelihood_on,
        "stream": [rng.seed, rng.stream_id],
    }
    return ClusterDraws(np.asarray(kept_theta), np.asarray(kept_sigma2), meta,
                        assignments=np.asarray(kept_labels, dtype=int))


def modal_partition(draws: ClusterDraws) -> np.ndarray:
    """Condense assignment draws to one labeling: link pairs that co-cluster
    in a majority of draws, then label the connected components."""
    if draws.assignments is None:
        raise ValueError("draws carry no assignment labels")
    a = draws.assignments
    m, n = a.shape
    co = np.zeros((n, n))
    for row in a:
        co += row[:, None] == row[None, :]
    link = co > 0.5 * m

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if link[i, j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    return np.asarray(_canonical_labels([find(i) for i in range(n)]))
