"""Command-line surface.

Subcommands: fit, cluster, fused-lasso, simulate, prior-curve, tune-scale.
Every run writes its primary CSV output plus a JSON provenance sidecar
(<output>.meta.json) holding the fully resolved configuration, the seed and
the package version. stdout stays silent unless --verbose; diagnostics go to
stderr.

Exit codes: 0 success, 2 bad flags or configuration, 3 unreadable or
malformed input, 4 sampler numeric failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .cluster import adaptive_cluster_run, dp_mixture_run, modal_partition
from .distributions import ScaledT, solve_tune_scale
from .fused_lasso import cv_select_lambda, default_lambda_grid, fused_lasso_1d
from .fusion import conditional_neg_log_prior, run_fusion_sampler
from .io import (IngestError, ingest_csv, write_draws_csv, write_fit_csv,
                 write_partition_csv, write_posterior_summary,
                 write_prior_curve_csv, write_rows, write_sidecar,
                 write_table_csv)
from .metrics import (adjacency_bayes, adjacency_true, b_statistic,
                      b_tilde_statistic, errors_and_posterior,
                      posterior_summary, r_statistic, w_statistic)
from .model import (DPHyper, LaplaceHyper, NumericError, SamplerConfig, THyper,
                    default_laplace_rate)
from .simulate import apply_override, default_config, run_replications, table_plan

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


def _grid_spec(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be lo:hi:steps")
    lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    return lo, hi, steps


def _sampler_args(parser):
    parser.add_argument("--iters", type=int, default=2000, help="total Gibbs iterations (default 2000)")
    parser.add_argument("--burnin", type=int, default=None,
                        help="discarded iterations (default iters/2)")
    parser.add_argument("--thin", type=int, default=1, help="thinning stride (default 1)")
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")


def _t_hyper_args(parser):
    parser.add_argument("--a-t", type=float, default=2.0, help="t mixing shape (default 2)")
    parser.add_argument("--b-t", type=float, default=0.005, help="t mixing rate (default 0.005)")
    parser.add_argument("--a-sigma", type=float, default=0.5, help="sigma^2 prior shape (default 0.5)")
    parser.add_argument("--b-sigma", type=float, default=0.5, help="sigma^2 prior rate (default 0.5)")
    parser.add_argument("--lambda1", type=float, default=5.0,
                        help="anchor variance multiplier (default 5)")


def _make_config(args) -> SamplerConfig:
    burnin = args.iters // 2 if args.burnin is None else args.burnin
    try:
        return SamplerConfig(iterations=args.iters, burnin=burnin, thin=args.thin,
                             seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfuse",
        description="Bayesian fusion/clustering via shrinkage on successive "
                    "differences, with fused-lasso baselines.")
    parser.add_argument("--version", action="version", version=f"tfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="run a fusion sampler on a sequence")
    p_fit.add_argument("--input", required=True, help="CSV with one numeric column (optional 'truth' column)")
    p_fit.add_argument("--output", default="posterior_summary.csv")
    p_fit.add_argument("--prior", required=True, choices=["t", "laplace"])
    _t_hyper_args(p_fit)
    p_fit.add_argument("--lam", "--lambda", dest="lam", type=float, default=None,
                       help="Laplace rate (default sqrt(2 log n))")
    p_fit.add_argument("--tune-scale", action="store_true",
                       help="set the t rate hyperparameter from the exceedance rule at df=2*a_t")
    _sampler_args(p_fit)
    p_fit.add_argument("--save-draws", default=None, help="also write retained draws to this CSV")
    p_fit.add_argument("--verbose", action="store_true")

    p_cl = sub.add_parser("cluster", help="run a clustering sampler")
    p_cl.add_argument("--input", required=True)
    p_cl.add_argument("--output", default="cluster_summary.csv")
    p_cl.add_argument("--method", required=True, choices=["fixed-rank", "adaptive", "dp"])
    _t_hyper_args(p_cl)
    p_cl.add_argument("--r-period", type=int, default=20,
                      help="iterations between rank refreshes (adaptive; default 20)")
    p_cl.add_argument("--r-start", type=int, default=None,
                      help="first iteration eligible for a rank refresh (default burnin)")
    p_cl.add_argument("--alpha", type=float, default=0.1, help="DP concentration (default 0.1)")
    p_cl.add_argument("--base-var", type=float, default=5.0, help="DP base-measure variance (default 5)")
    _sampler_args(p_cl)
    p_cl.add_argument("--save-draws", default=None)
    p_cl.add_argument("--verbose", action="store_true")

    p_fl = sub.add_parser("fused-lasso", help="exact 1-d fused-lasso fit")
    p_fl.add_argument("--input", required=True)
    p_fl.add_argument("--output", default="fused_lasso_fit.csv")
    group = p_fl.add_mutually_exclusive_group(required=True)
    group.add_argument("--lam", "--lambda", dest="lam", type=float, help="fusion penalty")
    group.add_argument("--cv", action="store_true", help="pick the penalty by structured K-fold CV")
    p_fl.add_argument("--grid", type=_grid_spec, default=(1e-2, 10.0, 30),
                      help="CV grid lo:hi:steps on a log scale (default 0.01:10:30)")
    p_fl.add_argument("--folds", type=int, default=5)
    p_fl.add_argument("--seed", type=int, default=0)
    p_fl.add_argument("--verbose", action="store_true")

    p_sim = sub.add_parser(
        "simulate", help="replicated method comparison",
        epilog="Configuration keys for --set (defaults in parentheses): "
               + "; ".join(_flatten_config_docs()),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p_sim.add_argument("--table", type=int, required=True, choices=[1, 2],
                       help="1: consecutive-block fusion comparison; 2: cluster comparison")
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--output", default=None, help="default table<k>.csv")
    p_sim.add_argument("--iters", type=int, default=None)
    p_sim.add_argument("--burnin", type=int, default=None)
    p_sim.add_argument("--thin", type=int, default=None)
    p_sim.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="dotted config override, e.g. prior.t.b_t=0.01 (repeatable)")
    p_sim.add_argument("--verbose", action="store_true")

    p_pc = sub.add_parser("prior-curve", help="conditional neg-log-prior curve data")
    p_pc.add_argument("--output", default="prior_curve.csv")
    p_pc.add_argument("--prior", required=True, choices=["t", "laplace"])
    p_pc.add_argument("--scale", type=float, default=0.05, help="t scale (default 0.05)")
    p_pc.add_argument("--df", type=float, default=4.0, help="t degrees of freedom (default 4)")
    p_pc.add_argument("--lam", "--lambda", dest="lam", type=float, default=None,
                      help="Laplace rate (required for --prior laplace)")
    p_pc.add_argument("--prev", type=float, default=-1.0)
    p_pc.add_argument("--next", dest="next_", type=float, default=1.0)
    p_pc.add_argument("--sigma", type=float, default=1.0)
    p_pc.add_argument("--grid", type=_grid_spec, default=(-3.0, 3.0, 601),
                      help="evaluation grid lo:hi:steps (default -3:3:601)")
    p_pc.add_argument("--verbose", action="store_true")

    p_ts = sub.add_parser("tune-scale", help="solve the scale exceedance rule")
    p_ts.add_argument("--n", type=int, required=True)
    p_ts.add_argument("--df", type=float, default=4.0)
    p_ts.add_argument("--output", default="tune_scale.csv")
    p_ts.add_argument("--verbose", action="store_true")
    return parser


def _flatten_config_docs() -> list[str]:
    docs = []
    for section, entries in default_config().items():
        for key, value in entries.items():
            if isinstance(value, dict):
                for leaf, default in value.items():
                    docs.append(f"{section}.{key}.{leaf} ({default})")
            else:
                docs.append(f"{section}.{key} ({value})")
    return docs


def _log(args, message: str) -> None:
    if args.verbose:
        print(message)


def _fit_metrics(dataset, draws, adj_hat) -> dict:
    l2, l1, pmsl2 = errors_and_posterior(draws, dataset.truth)
    metrics = {"l2": l2, "l1": l1, "post_mean_sq_l2": pmsl2}
    adj_true = adjacency_true(dataset.truth)
    point = draws.posterior_mean
    try:
        metrics["w"] = w_statistic(point, adj_true)
        metrics["b"] = b_statistic(point, adj_true)
        metrics["b_tilde"] = b_tilde_statistic(point, adj_true)
    except ValueError:
        pass  # constant or fully distinct truth leaves these undefined
    if adj_hat is not None:
        metrics["r"] = r_statistic(adj_hat, adj_true)
    return metrics


def _cmd_fit(args) -> int:
    dataset = ingest_csv(args.input)
    config = _make_config(args)
    resolved = {
        "a_t": args.a_t, "b_t": args.b_t, "a_sigma": args.a_sigma,
        "b_sigma": args.b_sigma, "lambda1": args.lambda1,
    }
    if args.prior == "t":
        if args.tune_scale:
            scale, b_t = solve_tune_scale(dataset.n, 2.0 * args.a_t)
            print(f"tune-scale: n={dataset.n} df={2.0 * args.a_t:g} "
                  f"scale={scale:.6g} b_t={b_t:.6g}", file=sys.stderr)
            resolved["b_t"] = b_t
        prior = THyper(a_t=resolved["a_t"], b_t=resolved["b_t"],
                       a_sigma=args.a_sigma, b_sigma=args.b_sigma,
                       lambda1=args.lambda1)
    else:
        lam = default_laplace_rate(dataset.n) if args.lam is None else args.lam
        resolved["lam"] = lam
        prior = LaplaceHyper(lam=lam, a_sigma=args.a_sigma, b_sigma=args.b_sigma,
                             lambda1=args.lambda1)

    _log(args, f"fit: prior={args.prior} n={dataset.n} iterations={config.iterations}")
    draws = run_fusion_sampler(dataset, prior, config)
    write_posterior_summary(args.output, posterior_summary(draws), draws.sigma2)
    if args.save_draws:
        write_draws_csv(args.save_draws, draws)

    payload = {
        "command": "fit", "version": __version__, "input": args.input,
        "output": args.output, "prior": args.prior, "config": resolved,
        "sampler": {"iterations": config.iterations, "burnin": config.burnin,
                    "thin": config.thin}, "seed": args.seed,
    }
    if dataset.truth is not None:
        adj = adjacency_bayes(draws.posterior_mean, draws.sigma_hat, prior, dataset.n)
        payload["metrics"] = _fit_metrics(dataset, draws, adj)
    write_sidecar(args.output, payload)
    return EXIT_OK


def _cmd_cluster(args) -> int:
    dataset = ingest_csv(args.input)
    config = _make_config(args)
    _log(args, f"cluster: method={args.method} n={dataset.n}")
    if args.method == "dp":
        hyper = DPHyper(base_var=args.base_var, alpha=args.alpha,
                        a_sigma=args.a_sigma, b_sigma=args.b_sigma)
        draws = dp_mixture_run(dataset, hyper, config)
        resolved = {"base_var": args.base_var, "alpha": args.alpha,
                    "a_sigma": args.a_sigma, "b_sigma": args.b_sigma}
    else:
        hyper = THyper(a_t=args.a_t, b_t=args.b_t, a_sigma=args.a_sigma,
                       b_sigma=args.b_sigma, lambda1=args.lambda1)
        r_period = args.r_period if args.method == "adaptive" else None
        draws = adaptive_cluster_run(dataset, hyper, config, r_period=r_period,
                                     r_start=args.r_start)
        resolved = {"a_t": args.a_t, "b_t": args.b_t, "a_sigma": args.a_sigma,
                    "b_sigma": args.b_sigma, "lambda1": args.lambda1,
                    "r_period": r_period, "r_start": args.r_start}

    write_posterior_summary(args.output, posterior_summary(draws), draws.sigma2)
    partition_file = None
    if args.method == "dp":
        from pathlib import Path
        out = Path(args.output)
        partition_file = str(out.with_name(out.stem + "_partition.csv"))
        write_partition_csv(partition_file, modal_partition(draws))
    if args.save_draws:
        write_draws_csv(args.save_draws, draws)
    write_sidecar(args.output, {
        "command": "cluster", "version": __version__, "input": args.input,
        "output": args.output, "method": args.method, "config": resolved,
        "sampler": {"iterations": config.iterations, "burnin": config.burnin,
                    "thin": config.thin}, "seed": args.seed,
        "partition_output": partition_file,
    })
    return EXIT_OK


def _cmd_fused_lasso(args) -> int:
    dataset = ingest_csv(args.input)
    lo, hi, steps = args.grid
    if args.cv:
        if steps < 1:
            raise UsageError("CV grid must contain at least one point")
        lam = cv_select_lambda(dataset.y, default_lambda_grid(lo, hi, steps), args.folds)
        _log(args, f"fused-lasso: CV selected lambda={lam:g}")
    else:
        lam = args.lam
        if lam < 0:
            raise UsageError("lambda must be >= 0")
    fit = fused_lasso_1d(dataset.y, lam)
    write_fit_csv(args.output, dataset.y, fit.theta_hat)
    payload = {
        "command": "fused-lasso", "version": __version__, "input": args.input,
        "output": args.output, "lambda": lam, "cv": bool(args.cv),
        "grid": [lo, hi, steps], "folds": args.folds, "seed": args.seed,
        "block_boundaries": fit.block_boundaries,
    }
    if dataset.truth is not None:
        l2, l1, _ = errors_and_posterior(fit.theta_hat, dataset.truth)
        payload["metrics"] = {"l2": l2, "l1": l1,
                              "r": r_statistic(adjacency_true(fit.theta_hat),
                                               adjacency_true(dataset.truth))}
    write_sidecar(args.output, payload)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    config = default_config()
    for flag in ("iters", "burnin", "thin"):
        value = getattr(args, flag)
        if value is not None:
            key = {"iters": "iterations"}.get(flag, flag)
            config["sampler"][key] = value
    for item in args.overrides:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            apply_override(config, key.strip(), _parse_value(raw.strip()))
        except KeyError as exc:
            raise UsageError(str(exc)) from None

    output = args.output or f"table{args.table}.csv"
    plan = table_plan(args.table, args.reps, args.seed, config)
    progress = None
    if args.verbose:
        def progress(method, rep, ok):
            print(f"{method} rep {rep}: {'ok' if ok else 'FAILED'}")
    table = run_replications(plan, progress=progress)
    write_table_csv(output, table, separation_metric="b" if args.table == 1 else "b_tilde")
    write_sidecar(output, {
        "command": "simulate", "version": __version__, "table": args.table,
        "reps": args.reps, "seed": args.seed, "methods": list(plan.methods),
        "config": config, "output": output,
        "failures": list(table.failures),
    })
    return EXIT_OK


def _parse_value(raw: str):
    lowered = raw.lower()
    if lowered in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _cmd_prior_curve(args) -> int:
    lo, hi, steps = args.grid
    if steps < 1:
        raise UsageError("grid must contain at least one point")
    grid = np.linspace(lo, hi, steps)
    if args.prior == "t":
        prior = ScaledT(df=args.df, scale=args.scale)
        resolved = {"df": args.df, "scale": args.scale}
    else:
        lam = args.lam
        if lam is None:
            raise UsageError("--lambda is required for the laplace prior")
        prior = LaplaceHyper(lam=lam)
        resolved = {"lam": lam}
    curve = conditional_neg_log_prior(grid, args.prev, args.next_, args.sigma, prior)
    write_prior_curve_csv(args.output, grid, curve)
    write_sidecar(args.output, {
        "command": "prior-curve", "version": __version__, "prior": args.prior,
        "config": resolved, "prev": args.prev, "next": args.next_,
        "sigma": args.sigma, "grid": [lo, hi, steps], "output": args.output,
    })
    return EXIT_OK


def _cmd_tune_scale(args) -> int:
    try:
        scale, b_t = solve_tune_scale(args.n, args.df)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_rows(args.output, ["n", "df", "scale", "b_t"],
               [[str(args.n), args.df, scale, b_t]])
    print(f"tune-scale: n={args.n} df={args.df:g} scale={scale:.6g} b_t={b_t:.6g}",
          file=sys.stderr)
    write_sidecar(args.output, {
        "command": "tune-scale", "version": __version__, "n": args.n,
        "df": args.df, "scale": scale, "b_t": b_t, "output": args.output,
    })
    return EXIT_OK


_HANDLERS = {
    "fit": _cmd_fit,
    "cluster": _cmd_cluster,
    "fused-lasso": _cmd_fused_lasso,
    "simulate": _cmd_simulate,
    "prior-curve": _cmd_prior_curve,
    "tune-scale": _cmd_tune_scale,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"tfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IngestError as exc:
        print(f"tfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"tfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"tfuse {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
