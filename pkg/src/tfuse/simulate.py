"""Scenario generators and the replication engine behind the method
comparison tables.

Every (method, replication) task derives its own random stream from the
master seed by stable hashing, so results are identical no matter how many
workers execute the plan or which other methods are requested. Data streams
depend only on the replication index: all methods within a replication see
the same dataset.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cluster import adaptive_cluster_run, dp_mixture_run, fixed_rank_run, pilot_rank
from .fused_lasso import cv_select_lambda, default_lambda_grid, fused_lasso_1d, sorted_fusion_fit
from .fusion import run_fusion_sampler
from .metrics import MetricReport, adjacency_bayes, adjacency_true, evaluate_estimate
from .model import Dataset, DPHyper, LaplaceHyper, SamplerConfig, THyper, default_laplace_rate
from .rng import RngStream, derive_stream_id

FUSION_KIND = "fusion-blocks"
CLUSTER_KIND = "cluster-labels"


@dataclass(frozen=True)
class Scenario:
    kind: str
    n: int = 100
    sigma_star: float = 0.5
    levels: tuple = (0.0, 2.0, 4.0)
    block_prob: tuple | None = None

    def __post_init__(self):
        if self.kind not in (FUSION_KIND, CLUSTER_KIND):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.sigma_star < 0:
            raise ValueError("sigma_star must be >= 0")
        if len(self.levels) == 0:
            raise ValueError("levels must be non-empty")
        if self.kind == FUSION_KIND:
            prob = self.block_prob
            if prob is None:
                prob = tuple(1.0 / len(self.levels) for _ in self.levels)
                object.__setattr__(self, "block_prob", prob)
            if len(prob) != len(self.levels):
                raise ValueError("block_prob must match levels in length")
            if abs(sum(prob) - 1.0) > 1e-9:
                raise ValueError("block_prob must sum to 1")


def gen_fusion_scenario(scenario: Scenario, rng: RngStream) -> Dataset:
    """Consecutive blocks with multinomial sizes; zero-size blocks simply
    drop their level."""
    if scenario.kind != FUSION_KIND:
        raise ValueError("scenario kind must be fusion-blocks")
    sizes = rng.gen.multinomial(scenario.n, scenario.block_prob)
    truth = np.repeat(np.asarray(scenario.levels, dtype=float), sizes)
    y = truth + scenario.sigma_star * rng.gen.standard_normal(scenario.n)
    return Dataset(y, truth)


def gen_cluster_scenario(scenario: Scenario, rng: RngStream) -> Dataset:
    """Independent uniform level assignment per index."""
    if scenario.kind != CLUSTER_KIND:
        raise ValueError("scenario kind must be cluster-labels")
    levels = np.asarray(scenario.levels, dtype=float)
    labels = rng.gen.integers(0, levels.size, size=scenario.n)
    truth = levels[labels]
    y = truth + scenario.sigma_star * rng.gen.standard_normal(scenario.n)
    return Dataset(y, truth)


def generate(scenario: Scenario, rng: RngStream) -> Dataset:
    if scenario.kind == FUSION_KIND:
        return gen_fusion_scenario(scenario, rng)
    return gen_cluster_scenario(scenario, rng)


DEFAULT_CONFIG = {
    "sampler": {"iterations": 2000, "burnin": 1000, "thin": 1},
    "prior": {
        "t": {"a_t": 2.0, "b_t": 0.005, "a_sigma": 0.5, "b_sigma": 0.5, "lambda1": 5.0},
        "laplace": {"lam": None, "a_sigma": 0.5, "b_sigma": 0.5, "lambda1": 5.0},
        "dp": {"base_var": 5.0, "alpha": 0.1, "a_sigma": 0.5, "b_sigma": 0.5},
    },
    # rank refreshes start mid-burn-in so the adaptation transient has died
    # out by the time draws are retained
    "cluster": {"r_period": 20, "r_start": 500},
    "lasso": {"grid_lo": 1e-2, "grid_hi": 10.0, "grid_size": 30, "folds": 5},
}


def default_config() -> dict:
    return {k: {kk: dict(vv) if isinstance(vv, dict) else vv for kk, vv in v.items()}
            for k, v in DEFAULT_CONFIG.items()}


def apply_override(config: dict, dotted_key: str, value) -> None:
    """Set a nested config entry by dotted key; unknown keys are rejected."""
    parts = dotted_key.split(".")
    node = config
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise KeyError(f"unknown configuration key {dotted_key!r}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise KeyError(f"unknown configuration key {dotted_key!r}")
    node[parts[-1]] = value


def _sampler_config(config: dict) -> SamplerConfig:
    s = config["sampler"]
    return SamplerConfig(iterations=int(s["iterations"]), burnin=int(s["burnin"]),
                         thin=int(s["thin"]), seed=0)


def _t_hyper(config: dict) -> THyper:
    return THyper(**config["prior"]["t"])


def _grid(config: dict) -> np.ndarray:
    g = config["lasso"]
    return default_lambda_grid(g["grid_lo"], g["grid_hi"], int(g["grid_size"]))


def _run_t_fusion(dataset, config, rng) -> MetricReport:
    hyper = _t_hyper(config)
    draws = run_fusion_sampler(dataset, hyper, _sampler_config(config), rng=rng)
    adj = adjacency_bayes(draws.posterior_mean, draws.sigma_hat, hyper, dataset.n)
    return evaluate_estimate(dataset.truth, None, draws=draws, adj_hat=adj)


def _run_laplace_fusion(dataset, config, rng) -> MetricReport:
    raw = dict(config["prior"]["laplace"])
    if raw.get("lam") is None:
        raw["lam"] = default_laplace_rate(dataset.n)
    hyper = LaplaceHyper(**raw)
    draws = run_fusion_sampler(dataset, hyper, _sampler_config(config), rng=rng)
    adj = adjacency_bayes(draws.posterior_mean, draws.sigma_hat, hyper, dataset.n)
    return evaluate_estimate(dataset.truth, None, draws=draws, adj_hat=adj)


def _run_l1_fusion(dataset, config, rng) -> MetricReport:
    lam = cv_select_lambda(dataset.y, _grid(config), int(config["lasso"]["folds"]), rng)
    fit = fused_lasso_1d(dataset.y, lam)
    return evaluate_estimate(dataset.truth, fit.theta_hat,
                             adj_hat=adjacency_true(fit.theta_hat))


def _run_t_adaptive(dataset, config, rng) -> MetricReport:
    hyper = _t_hyper(config)
    draws = adaptive_cluster_run(dataset, hyper, _sampler_config(config),
                                 r_period=config["cluster"]["r_period"],
                                 r_start=config["cluster"]["r_start"], rng=rng)
    adj = adjacency_bayes(draws.posterior_mean, draws.sigma_hat, hyper, dataset.n)
    return evaluate_estimate(dataset.truth, None, draws=draws, adj_hat=adj)


def _run_t_fixed_rank(dataset, config, rng) -> MetricReport:
    hyper = _t_hyper(config)
    draws = fixed_rank_run(dataset, hyper, _sampler_config(config), rng=rng)
    adj = adjacency_bayes(draws.posterior_mean, draws.sigma_hat, hyper, dataset.n)
    return evaluate_estimate(dataset.truth, None, draws=draws, adj_hat=adj)


def _run_dp(dataset, config, rng) -> MetricReport:
    hyper = DPHyper(**config["prior"]["dp"])
    draws = dp_mixture_run(dataset, hyper, _sampler_config(config), rng=rng)
    return evaluate_estimate(dataset.truth, None, draws=draws, adj_hat=None)


def _run_l1_sorted(dataset, config, rng) -> MetricReport:
    y_sorted = dataset.y[pilot_rank(dataset.y)]
    lam = cv_select_lambda(y_sorted, _grid(config), int(config["lasso"]["folds"]), rng)
    fit = sorted_fusion_fit(dataset.y, lam)
    return evaluate_estimate(dataset.truth, fit.theta_hat,
                             adj_hat=adjacency_true(fit.theta_hat))


METHODS = {
    "t-fusion": _run_t_fusion,
    "laplace-fusion": _run_laplace_fusion,
    "l1-fusion": _run_l1_fusion,
    "t-adaptive": _run_t_adaptive,
    "t-fixed-rank": _run_t_fixed_rank,
    "dp": _run_dp,
    "l1-sorted": _run_l1_sorted,
}

TABLE_METHODS = {
    1: ("t-fusion", "laplace-fusion", "l1-fusion"),
    2: ("t-adaptive", "t-fixed-rank", "dp", "l1-sorted"),
}

TABLE_SCENARIOS = {
    1: Scenario(FUSION_KIND, n=100, sigma_star=0.5, levels=(0.0, 2.0, 4.0)),
    2: Scenario(CLUSTER_KIND, n=100, sigma_star=0.5, levels=(0.0, 2.0, 4.0)),
}


@dataclass(frozen=True)
class ReplicationPlan:
    scenario: Scenario
    methods: tuple
    reps: int
    master_seed: int
    config: dict = field(default_factory=default_config)

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method tags: {unknown}")
        object.__setattr__(self, "methods", tuple(sorted(set(self.methods))))


def data_stream(plan: ReplicationPlan, rep: int) -> RngStream:
    return RngStream(plan.master_seed, derive_stream_id("data", plan.scenario.kind, rep))


def method_stream(plan: ReplicationPlan, method: str, rep: int) -> RngStream:
    return RngStream(plan.master_seed, derive_stream_id("method", method, rep))


def _run_task(plan: ReplicationPlan, method: str, rep: int):
    dataset = generate(plan.scenario, data_stream(plan, rep))
    rng = method_stream(plan, method, rep)
    try:
        return method, rep, METHODS[method](dataset, plan.config, rng), None
    except Exception as exc:  # recorded; run continues unless too many fail
        failure = {"method": method, "rep": rep, "seed": plan.master_seed,
                   "stream_id": rng.stream_id, "error": f"{type(exc).__name__}: {exc}"}
        return method, rep, None, failure


def _worker(args):
    return _run_task(*args)


def worker_count() -> int:
    env = os.environ.get("TFUSE_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class AggregateTable:
    """Mean and standard error (sample SD / sqrt(reps)) per method and metric.

    `rows` maps method -> metric -> (mean, se); a metric the method does not
    define maps to None, and se is None when only one replication succeeded.
    """

    rows: dict
    methods: tuple
    reps: int
    failures: tuple
    master_seed: int


def run_replications(plan: ReplicationPlan, progress=None) -> AggregateTable:
    tasks = [(plan, method, rep) for method in plan.methods for rep in range(plan.reps)]
    workers = min(worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_worker, tasks, chunksize=1))
    else:
        raw = [_run_task(*t) for t in tasks]

    results = {}
    failures = []
    for method, rep, report, failure in raw:
        if failure is not None:
            failures.append(failure)
        else:
            results[(method, rep)] = report
        if progress is not None:
            progress(method, rep, failure is None)

    if len(failures) * 10 >= len(tasks):
        raise RuntimeError(
            f"aborted: {len(failures)} of {len(tasks)} replication tasks failed; "
            f"first failure: {failures[0]}")

    rows = {}
    for method in plan.methods:
        reports = [results[(method, rep)] for rep in range(plan.reps)
                   if (method, rep) in results]
        stats = {}
        for name in MetricReport.FIELDS:
            values = [r.values()[name] for r in reports]
            if any(v is None for v in values) or not values:
                stats[name] = None
                continue
            mean = sum(values) / len(values)
            if len(values) >= 2:
                var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                se = math.sqrt(var) / math.sqrt(len(values))
            else:
                se = None
            stats[name] = (mean, se)
        rows[method] = stats
    return AggregateTable(rows=rows, methods=plan.methods, reps=plan.reps,
                          failures=tuple(failures), master_seed=plan.master_seed)


def table_plan(table: int, reps: int, master_seed: int,
               config: dict | None = None) -> ReplicationPlan:
    if table not in TABLE_METHODS:
        raise ValueError("table must be 1 or 2")
    return ReplicationPlan(scenario=TABLE_SCENARIOS[table], methods=TABLE_METHODS[table],
                           reps=reps, master_seed=master_seed,
                           config=config if config is not None else default_config())
