"""CSV ingestion and the file formats emitted by the CLI.

All numeric cells are written with shortest round-trip formatting, so parsing
a written file reproduces the values exactly; missing metrics are written as
the literal NA.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .metrics import DEFAULT_QUANTILES, MetricReport, PosteriorSummary
from .model import Dataset, PosteriorDraws


class IngestError(ValueError):
    """Input file missing, unreadable, or malformed."""


def _try_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def ingest_csv(path) -> Dataset:
    """Read a one-column numeric sequence, with an optional header row and an
    optional second column named (or positioned as) truth."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [[c.strip() for c in row] for row in csv.reader(fh)]
    except OSError as exc:
        raise IngestError(f"cannot read input file {path}: {exc.strerror}") from None
    rows = [r for r in rows if any(r)]
    if not rows:
        raise IngestError(f"input file {path} contains no data")

    first = rows[0]
    has_header = any(_try_float(c) is None for c in first if c)
    y_col, truth_col = 0, 1 if len(first) > 1 else None
    start = 0
    if has_header:
        names = [c.lower() for c in first]
        if "y" in names:
            y_col = names.index("y")
        truth_col = names.index("truth") if "truth" in names else None
        start = 1

    y, truth = [], []
    for k, row in enumerate(rows[start:], start=start + 1):
        if y_col >= len(row):
            raise IngestError(f"{path}: row {k} has no value column")
        value = _try_float(row[y_col])
        if value is None:
            raise IngestError(f"{path}: non-numeric value {row[y_col]!r} at row {k}")
        y.append(value)
        if truth_col is not None:
            if truth_col >= len(row):
                raise IngestError(f"{path}: row {k} is missing the truth column")
            tv = _try_float(row[truth_col])
            if tv is None:
                raise IngestError(f"{path}: non-numeric truth {row[truth_col]!r} at row {k}")
            truth.append(tv)
    if len(y) < 2:
        raise IngestError(f"{path}: need at least 2 observations, found {len(y)}")
    return Dataset(np.asarray(y), np.asarray(truth) if truth else None)


def fmt_cell(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def parse_cell(cell: str) -> float | None:
    return None if cell == "NA" else float(cell)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt_cell(c) for c in row])


def quantile_labels(probs) -> list[str]:
    return [f"q{100 * p:g}" for p in probs]


def write_posterior_summary(path, summary: PosteriorSummary,
                            sigma2_draws: np.ndarray | None = None) -> None:
    """One row per coordinate (1-based index), then a sigma2 summary line."""
    header = ["index", "mean"] + quantile_labels(summary.probs)
    rows = [[str(i + 1), summary.mean[i], *summary.quantiles[i]]
            for i in range(summary.mean.size)]
    if sigma2_draws is not None:
        qs = np.quantile(sigma2_draws, summary.probs)
        rows.append(["sigma2", float(sigma2_draws.mean()), *qs])
    write_rows(path, header, rows)


def write_draws_csv(path, draws: PosteriorDraws) -> None:
    n = draws.theta.shape[1]
    header = [f"theta_{i + 1}" for i in range(n)] + ["sigma2"]
    rows = [[*draws.theta[d], draws.sigma2[d]] for d in range(draws.n_draws)]
    write_rows(path, header, rows)


def write_fit_csv(path, y, theta_hat) -> None:
    rows = [[str(i + 1), y[i], theta_hat[i]] for i in range(len(y))]
    write_rows(path, ["index", "y", "theta_hat"], rows)


def write_partition_csv(path, labels) -> None:
    rows = [[str(i + 1), int(labels[i])] for i in range(len(labels))]
    write_rows(path, ["index", "cluster"], rows)


def write_prior_curve_csv(path, grid, values) -> None:
    write_rows(path, ["theta_i", "neg_log_density"],
               [[g, v] for g, v in zip(grid, values)])


def table_header(separation: str) -> list[str]:
    header = ["method"]
    for name, label in (("l2", "l2"), ("l1", "l1"), ("post_mean_sq_l2", "pmsl2"),
                        ("w", "W"), ("sep", separation), ("r", "R")):
        header += [label, f"{label}_se"]
    return header


def write_table_csv(path, table, separation_metric: str = "b") -> None:
    """Aggregated method x metric table; `separation_metric` picks whether the
    separation column reports b or b_tilde (header B / B_tilde)."""
    label = {"b": "B", "b_tilde": "B_tilde"}[separation_metric]
    rows = []
    for method in table.methods:
        stats = table.rows[method]
        row = [method]
        for name in ("l2", "l1", "post_mean_sq_l2", "w", separation_metric, "r"):
            entry = stats[name]
            if entry is None:
                row += [None, None]
            else:
                mean, se = entry
                row += [mean, se]
        rows.append(row)
    write_rows(path, table_header(label), rows)


def sidecar_path(output) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".meta.json")


def write_sidecar(output, payload: dict) -> Path:
    path = sidecar_path(output)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, MetricReport):
        return obj.values()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")
