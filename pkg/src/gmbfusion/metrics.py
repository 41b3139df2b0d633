"""OSPA distance, per-step sample statistics and the Monte Carlo harness."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import FilterDivergenceError, InvalidParameterError

CSV_COLUMNS = ("step", "method", "mean_ospa", "std_ospa", "mean_card", "std_card", "true_card")


@dataclass(frozen=True)
class OspaParams:
    cutoff: float = 200.0
    order: float = 2.0

    def __post_init__(self):
        if not self.cutoff > 0:
            raise InvalidParameterError("OSPA cutoff must be positive")
        if not self.order >= 1:
            raise InvalidParameterError("OSPA order must be at least 1")


def ospa(X, Y, params=OspaParams()):
    """OSPA distance between two point sets given as (n, d) arrays.

    Two empty sets are at distance 0.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    X = X.reshape(len(X), -1) if X.size else np.empty((0, 1))
    Y = Y.reshape(len(Y), -1) if Y.size else np.empty((0, 1))
    m, n = len(X), len(Y)
    if m == 0 and n == 0:
        return 0.0
    # canonical row and argument order so that the result is bit-for-bit
    # symmetric and independent of point order
    X = X[np.lexsort(X.T[::-1])] if m else X
    Y = Y[np.lexsort(Y.T[::-1])] if n else Y
    if m > n or (m == n and X.tobytes() > Y.tobytes()):
        X, Y, m, n = Y, X, n, m
    c, p = params.cutoff, params.order
    if m == 0:
        return float(c)
    d = np.minimum(cdist(X, Y), c) ** p
    rows, cols = linear_sum_assignment(d)
    total = d[rows, cols].sum() + c ** p * (n - m)
    return float(min((total / n) ** (1.0 / p), c))


def sample_stats(values):
    """Mean and (n-1)-normalized standard deviation along axis 0; std is 0 for one sample."""
    values = np.asarray(values, dtype=float)
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if len(values) > 1 else np.zeros_like(mean)
    return mean, std


@dataclass
class RunResult:
    """Per-step OSPA and cardinality estimates of one run, keyed by method.

    ``fallbacks`` counts, per fusion method, the steps where fusion
    degenerated and a substitute estimate was scored.
    """

    ospa: dict
    card: dict
    true_card: np.ndarray
    fallbacks: dict = field(default_factory=dict)


@dataclass
class MonteCarloSummary:
    steps: np.ndarray
    methods: list
    mean_ospa: dict
    std_ospa: dict
    mean_card: dict
    std_card: dict
    true_card: np.ndarray
    n_runs: int
    failures: list
    fallbacks: dict = field(default_factory=dict)

    def time_averaged_ospa(self, method):
        return float(self.mean_ospa[method].mean())

    def rows(self):
        for k, step in enumerate(self.steps):
            for method in self.methods:
                yield (int(step), method, self.mean_ospa[method][k], self.std_ospa[method][k],
                       self.mean_card[method][k], self.std_card[method][k], self.true_card[k])


def summarize(results, steps, failures=()):
    """Aggregate a list of ``RunResult`` into per-step statistics."""
    if not results:
        raise InvalidParameterError("no successful runs to summarize")
    methods = list(results[0].ospa)
    stats = {}
    for key in ("ospa", "card"):
        for method in methods:
            stats[key, method] = sample_stats([getattr(r, key)[method] for r in results])
    true_card = np.mean([r.true_card for r in results], axis=0)
    fallbacks = {}
    for r in results:
        for m, n in r.fallbacks.items():
            fallbacks[m] = fallbacks.get(m, 0) + n
    return MonteCarloSummary(
        np.asarray(steps), methods,
        {m: stats["ospa", m][0] for m in methods}, {m: stats["ospa", m][1] for m in methods},
        {m: stats["card", m][0] for m in methods}, {m: stats["card", m][1] for m in methods},
        true_card, len(results), list(failures), fallbacks)


def monte_carlo(run, seeds, steps, map_fn=map):
    """Run ``run(seed) -> RunResult`` for every seed and aggregate.

    Runs raising ``FilterDivergenceError`` are excluded and reported in
    ``failures`` as ``(seed, message)``. ``map_fn`` may be a process pool's
    ``map``; results are aggregated in seed order either way.
    """
    seeds = list(seeds)
    if not seeds:
        raise InvalidParameterError("n_runs must be at least 1")
    outcomes = list(map_fn(_guarded(run), seeds))
    results = [o for o in outcomes if isinstance(o, RunResult)]
    failures = [(s, o) for s, o in zip(seeds, outcomes) if not isinstance(o, RunResult)]
    return summarize(results, steps, failures)


class _guarded:
    def __init__(self, run):
        self.run = run

    def __call__(self, seed):
        try:
            return self.run(seed)
        except FilterDivergenceError as exc:
            return str(exc)


def _fmt(v):
    return f"{float(v):.6f}"


def write_summary_csv(summary, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for step, method, *vals in summary.rows():
            w.writerow([step, method] + [_fmt(v) for v in vals])


def read_summary_csv(path):
    """Rows of a summary CSV as dicts; numeric columns converted to float."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        rows = []
        for row in reader:
            rows.append({k: (v if k == "method" else float(v)) for k, v in row.items()})
    return header, rows
