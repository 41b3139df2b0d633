"""Experiment pipeline: local filters, approximation, fusion, scoring.

Each node runs its own GLMB filter on its own scans. At every step the
posteriors are stripped of labels, approximated (second-order or
first-order), fused sequentially with node 1 as reference, and the fused MAP
estimate is scored against the truth. The fused density is an output only;
it is not fed back into the local filters.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .approx import strip_labels, to_fogmb, to_sogmb
from .errors import DegenerateFusionError, InvalidParameterError, SchemaError
from .fusion import FusionWeights, default_schedule, extract_map as fused_map, fuse_sequential
from .glmb import GlmbFilter, extract_map
from .metrics import CSV_COLUMNS, OspaParams, RunResult, monte_carlo, ospa, read_summary_csv, write_summary_csv
from .scenario import generate_scans, generate_truth, load_config, truth_positions

FUSION_METHODS = ("fogmb-fusion", "sogmb-fusion")


@dataclass(frozen=True)
class Tuning:
    k_best: int = 100
    predict_components: int = 100
    birth_components: int | None = None
    prune_threshold: float = 1e-5
    max_components: int = 100
    gate: float = 6.0
    fusion_hypotheses: int = 100
    fusion_threshold: float = 1e-6
    k_maps: int | None = None
    mixture_components: int | None = 8
    omega: float | None = None  # weight of the reference node for two nodes; None shares equally
    ospa: OspaParams = OspaParams()


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    methods: tuple = ()
    n_runs: int = 1
    base_seed: int = 0
    output_dir: str = "results"
    tuning: Tuning = field(default_factory=Tuning)
    jobs: int = 1

    def __post_init__(self):
        if self.n_runs < 1:
            raise InvalidParameterError("n_runs must be at least 1")
        if self.jobs < 1:
            raise InvalidParameterError("jobs must be at least 1")


def local_method(i):
    return f"local-node-{i + 1}"


def all_methods(n_nodes):
    return tuple(local_method(i) for i in range(n_nodes)) + FUSION_METHODS


def check_methods(methods, n_nodes):
    valid = all_methods(n_nodes)
    methods = tuple(methods) or valid
    for m in methods:
        if m not in valid:
            raise InvalidParameterError(f"unknown method {m!r}; choose from {', '.join(valid)}")
    return tuple(m for m in valid if m in methods)


def _schedule(tuning, n_nodes):
    if tuning.omega is None:
        return default_schedule(n_nodes)
    if n_nodes != 2:
        raise InvalidParameterError("an explicit omega is only defined for two nodes")
    return [FusionWeights.of(tuning.omega)]


def fuse_posteriors(posteriors, method, tuning):
    """Fused MAP estimate (n, dim) of labeled local posteriors."""
    unlabeled = [strip_labels(g) for g in posteriors]
    if method == "sogmb-fusion":
        approx = [to_sogmb(g, tuning.mixture_components) for g in unlabeled]
    elif method == "fogmb-fusion":
        approx = [to_fogmb(g, tuning.fusion_hypotheses, tuning.mixture_components) for g in unlabeled]
    else:
        raise InvalidParameterError(f"{method!r} is not a fusion method")
    fused = fuse_sequential(approx, _schedule(tuning, len(approx)), max_components=tuning.mixture_components,
                            k_maps=tuning.k_maps, max_hypotheses=tuning.fusion_hypotheses,
                            threshold=tuning.fusion_threshold)
    return fused_map(fused)


def run_once(config, seed, methods, tuning=Tuning(), sensor_seeds=None, record=None):
    """One Monte Carlo run; returns per-step OSPA and cardinality estimates.

    ``sensor_seeds[i]`` overrides which scan stream node ``i`` reads, which
    lets two nodes see identical scans. ``record`` (a list) receives the
    per-step estimates when given.

    When fusion degenerates at a step (no fused hypothesis has positive
    weight, e.g. the nodes agree on no cardinality), the fusion method
    reports the reference node's estimate for that step; such steps are
    counted in ``RunResult.fallbacks``.
    """
    n_nodes = len(config.sensors)
    truth = generate_truth(config)
    streams = sensor_seeds or list(range(n_nodes))
    scans = [generate_scans(config, truth, i, seed, streams[i]) for i in range(n_nodes)]
    filters = [GlmbFilter(config.motion, config.sensor(i), config.birth, k_best=tuning.k_best,
                          predict_components=tuning.predict_components,
                          birth_components=tuning.birth_components, prune_threshold=tuning.prune_threshold,
                          max_components=tuning.max_components, gate=tuning.gate)
               for i in range(n_nodes)]
    n_steps = config.duration
    ospa_v = {m: np.zeros(n_steps) for m in methods}
    card_v = {m: np.zeros(n_steps) for m in methods}
    true_card = np.array([len(t) for t in truth], dtype=float)
    fallbacks = {m: 0 for m in methods if m in FUSION_METHODS}
    for k in range(n_steps):
        posteriors = [f.step(s[k]) for f, s in zip(filters, scans)]
        X_true = truth_positions(truth[k])
        estimates = {}
        for m in methods:
            if m in FUSION_METHODS:
                try:
                    X = fuse_posteriors(posteriors, m, tuning)
                except DegenerateFusionError:
                    X = extract_map(posteriors[0])[0]
                    fallbacks[m] += 1
            else:
                X = extract_map(posteriors[int(m.rsplit("-", 1)[1]) - 1])[0]
            estimates[m] = X
            ospa_v[m][k] = ospa(X[:, :2], X_true, tuning.ospa)
            card_v[m][k] = len(X)
        if record is not None:
            record.append(estimates)
    return RunResult(ospa_v, card_v, true_card, fallbacks)


class _Runner:
    def __init__(self, config, methods, tuning):
        self.config, self.methods, self.tuning = config, methods, tuning

    def __call__(self, seed):
        return run_once(self.config, seed, self.methods, self.tuning)


def run_config(config, methods=(), n_runs=1, base_seed=0, tuning=Tuning(), jobs=1):
    """Monte Carlo summary of ``n_runs`` runs with seeds ``base_seed, base_seed + 1, ...``."""
    methods = check_methods(methods, len(config.sensors))
    seeds = range(base_seed, base_seed + n_runs)
    runner = _Runner(config, methods, tuning)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return monte_carlo(runner, seeds, list(config.steps), pool.map)
    return monte_carlo(runner, seeds, list(config.steps))


def run_experiment(spec, config=None):
    """Run ``spec`` and write ``summary.csv`` (and ``failures.csv`` when runs diverged).

    Returns ``(summary, path to summary.csv)``.
    """
    config = load_config(spec.scenario) if config is None else config
    summary = run_config(config, spec.methods, spec.n_runs, spec.base_seed, spec.tuning, spec.jobs)
    os.makedirs(spec.output_dir, exist_ok=True)
    path = os.path.join(spec.output_dir, "summary.csv")
    write_summary_csv(summary, path)
    if summary.failures:
        with open(os.path.join(spec.output_dir, "failures.csv"), "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["seed", "error"])
            w.writerows(summary.failures)
    return summary, path


# --- plot data --------------------------------------------------------------

def emit_plotdata(summary_csv, output_dir):
    """Wide per-figure series from a summary CSV.

    ``cardinality.csv``: step, true_card, one mean cardinality column per method.
    ``ospa.csv``: step, one mean OSPA column per method.
    ``cardinality_std.csv``: step, true_card, then ``<method>_lower`` and
    ``<method>_upper`` (mean -/+ one standard deviation) per method.
    Returns the written paths.
    """
    header, rows = read_summary_csv(summary_csv)
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{summary_csv}: missing columns {', '.join(missing)}")
    methods = list(dict.fromkeys(r["method"] for r in rows))
    steps = sorted({int(r["step"]) for r in rows})
    table = {(int(r["step"]), r["method"]): r for r in rows}
    true_card = {int(r["step"]): r["true_card"] for r in rows}
    os.makedirs(output_dir, exist_ok=True)
    written = []

    def write(name, head, make_row):
        path = os.path.join(output_dir, name)
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(head)
            for s in steps:
                w.writerow([s] + [f"{v:.6f}" for v in make_row(s)])
        written.append(path)

    write("cardinality.csv", ["step", "true_card"] + methods,
          lambda s: [true_card[s]] + [table[s, m]["mean_card"] for m in methods])
    write("ospa.csv", ["step"] + methods, lambda s: [table[s, m]["mean_ospa"] for m in methods])
    band_head = ["step", "true_card"] + [f"{m}_{side}" for m in methods for side in ("lower", "upper")]
    write("cardinality_std.csv", band_head,
          lambda s: [true_card[s]] + [v for m in methods for v in
                                      (table[s, m]["mean_card"] - table[s, m]["std_card"],
                                       table[s, m]["mean_card"] + table[s, m]["std_card"])])
    return written


def with_overrides(config, **overrides):
    """Copy of ``config`` with top-level fields replaced (``None`` values ignored)."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
