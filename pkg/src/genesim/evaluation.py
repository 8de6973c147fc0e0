"""Repeated stratified cross-validation with paired significance tests.

Every algorithm sees the identical fold plan per dataset and repeat, so
per-repeat accuracy differences are paired. A repeat's measurement is the
mean over its folds; a cell holds one measurement per repeat. Differences
between two algorithms on a dataset are judged with a paired bootstrap
sign test, and the verdicts are aggregated into a win-tie-loss matrix.

Complexity is measured as node count for single trees and as committee
size for bagged or boosted committees.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .data import Dataset, make_folds
from .errors import ConfigError, ValidationError
from .genetic import GAConfig, run_genesim
from .induce import EnsembleConfig, InduceConfig, bag, boost, induce_tree
from .seeding import derive_seed, spawn_rng
from .tree import DecisionTree, distribution_batch, node_count, predict_batch

SINGLE_TREE = "single_tree"
BAGGED_COMMITTEE = "bagged_committee"
BOOSTED_COMMITTEE = "boosted_committee"
GENESIM = "genesim"
ALGORITHM_KINDS = (SINGLE_TREE, BAGGED_COMMITTEE, BOOSTED_COMMITTEE, GENESIM)


@dataclass(frozen=True)
class AlgorithmSpec:
    """One competitor: a kind plus its parameter blob.

    Parameters are passed to the matching config (InduceConfig fields for
    single_tree; rounds/max_depth/criterion for committees; "ga" and
    "ensemble" sub-objects for genesim). Seeds inside parameters are
    ignored: per-cell seeds are derived from the experiment seed.
    """

    name: str
    kind: str
    parameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGORITHM_KINDS:
            raise ConfigError(
                f"algorithm {self.name!r}: kind must be one of {ALGORITHM_KINDS}, "
                f"got {self.kind!r}"
            )
        object.__setattr__(self, "parameters", dict(self.parameters))


@dataclass(frozen=True)
class CellResult:
    """Per-repeat measurements of one algorithm on one dataset."""

    accuracies: tuple[float, ...]
    complexities: tuple[float, ...]
    error: str | None = None

    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    def std_accuracy(self) -> float:
        return _std(self.accuracies)

    def mean_complexity(self) -> float:
        return float(np.mean(self.complexities))

    def std_complexity(self) -> float:
        return _std(self.complexities)


def _std(values) -> float:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        return 0.0
    return float(arr.std(ddof=1))


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    dataset_names: tuple[str, ...]
    algorithm_names: tuple[str, ...]
    n_folds: int
    n_repeats: int
    seed: int
    cells: Mapping[tuple[str, str], CellResult]


@dataclass(frozen=True)
class WTLMatrix:
    """Win-tie-loss counts over datasets for every ordered algorithm pair.

    flagged lists (dataset, a, b) triples that were forced to a tie
    because a cell was missing or failed.
    """

    algorithms: tuple[str, ...]
    alpha: float
    cells: Mapping[tuple[str, str], tuple[int, int, int]]
    flagged: tuple[tuple[str, str, str], ...] = ()


def _strip_seed(params: Mapping[str, Any]) -> dict:
    return {k: v for k, v in params.items() if k != "seed"}


class _FittedTree:
    def __init__(self, tree: DecisionTree):
        self.tree = tree
        self.complexity = float(node_count(tree))

    def predict(self, rows) -> np.ndarray:
        return predict_batch(self.tree, rows)


class _FittedCommittee:
    """Uniform soft-vote committee: average member distributions, argmax."""

    def __init__(self, trees: list[DecisionTree]):
        if not trees:
            raise ValidationError("a committee needs at least one tree")
        self.trees = trees
        self.complexity = float(len(trees))

    def predict(self, rows) -> np.ndarray:
        total = distribution_batch(self.trees[0], rows)
        for tree in self.trees[1:]:
            total = total + distribution_batch(tree, rows)
        return np.argmax(total, axis=1)


def fit_algorithm(dataset: Dataset, train_indices, spec: AlgorithmSpec, seed: int):
    """Train one competitor on the given rows; returns a fitted model
    exposing predict(rows) and a complexity measure."""
    params = _strip_seed(spec.parameters)
    if spec.kind == SINGLE_TREE:
        cfg = InduceConfig(seed=seed, **params)
        return _FittedTree(induce_tree(dataset, train_indices, cfg))
    if spec.kind == BAGGED_COMMITTEE:
        rounds = params.pop("rounds", 10)
        cfg = InduceConfig(seed=seed, **params)
        return _FittedCommittee(bag(dataset, train_indices, cfg, rounds, seed))
    if spec.kind == BOOSTED_COMMITTEE:
        rounds = params.pop("rounds", 10)
        max_depth = params.pop("max_depth", 3)
        criterion = params.pop("criterion", "gini")
        if params:
            raise ConfigError(
                f"algorithm {spec.name!r}: unknown parameters {sorted(params)}"
            )
        trees = boost(dataset, train_indices, rounds, max_depth, seed, criterion)
        if not trees:
            # every round stopped early; fall back to one depth-capped tree
            cfg = InduceConfig(criterion=criterion, max_depth=max_depth, seed=seed)
            trees = [induce_tree(dataset, train_indices, cfg)]
        return _FittedCommittee(trees)
    ga_params = _strip_seed(params.pop("ga", {}))
    ens_params = _strip_seed(params.pop("ensemble", {}))
    if params:
        raise ConfigError(f"algorithm {spec.name!r}: unknown parameters {sorted(params)}")
    ga = GAConfig(seed=seed, **ga_params)
    if "base_configs" in ens_params:
        ens_params["base_configs"] = tuple(
            InduceConfig(**_strip_seed(bc)) for bc in ens_params["base_configs"]
        )
    ensemble = EnsembleConfig(seed=derive_seed(seed, "ensemble"), **ens_params)
    return _FittedTree(run_genesim(dataset, train_indices, ga, ensemble))


def _run_repeat(
    dataset: Dataset,
    assignment: np.ndarray,
    n_folds: int,
    spec: AlgorithmSpec,
    seed_parts: tuple,
) -> tuple[float, float]:
    accs = []
    compls = []
    for fold in range(n_folds):
        train_idx = np.nonzero(assignment != fold)[0]
        test_idx = np.nonzero(assignment == fold)[0]
        model = fit_algorithm(
            dataset, train_idx, spec, derive_seed(*seed_parts, "fold", fold)
        )
        preds = model.predict(dataset.rows[test_idx])
        accs.append(float(np.mean(preds == dataset.labels[test_idx])))
        compls.append(model.complexity)
    return float(np.mean(accs)), float(np.mean(compls))


def _repeat_job(payload):
    ds_name, dataset, assignment, n_folds, spec, seed_parts = payload
    try:
        acc, compl = _run_repeat(dataset, assignment, n_folds, spec, seed_parts)
        return ds_name, spec.name, None, acc, compl
    except Exception as exc:  # per-cell failures are recorded, not fatal
        return ds_name, spec.name, f"{type(exc).__name__}: {exc}", 0.0, 0.0


def run_experiment(
    datasets: list[tuple[str, Dataset]],
    algorithms: list[AlgorithmSpec],
    n_folds: int,
    n_repeats: int,
    seed: int,
    jobs: int = 1,
    progress: Callable[[str, str, int], None] | None = None,
) -> ExperimentReport:
    """Measure every algorithm on every dataset under a shared fold plan.

    The fold plan for a dataset depends only on the experiment seed and
    the dataset, so all algorithms are compared on identical splits.
    jobs > 1 spreads (dataset, algorithm, repeat) cells over processes;
    results are identical either way.
    """
    if not datasets:
        raise ConfigError("run_experiment needs at least one dataset")
    if not algorithms:
        raise ConfigError("run_experiment needs at least one algorithm")
    ds_names = [name for name, _ in datasets]
    alg_names = [spec.name for spec in algorithms]
    if len(set(ds_names)) != len(ds_names):
        raise ConfigError(f"dataset names must be unique, got {ds_names}")
    if len(set(alg_names)) != len(alg_names):
        raise ConfigError(f"algorithm names must be unique, got {alg_names}")
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")

    plans = {
        name: make_folds(ds, n_folds, n_repeats, derive_seed(seed, "folds", name))
        for name, ds in datasets
    }
    payloads = []
    for name, ds in datasets:
        for spec in algorithms:
            for r in range(n_repeats):
                payloads.append(
                    (
                        name,
                        ds,
                        plans[name].assignments[r],
                        n_folds,
                        spec,
                        (seed, "cell", name, spec.name, "repeat", r),
                    )
                )

    if jobs == 1:
        outcomes = [_repeat_job(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_repeat_job, payloads))

    grouped: dict[tuple[str, str], list] = {}
    for payload, outcome in zip(payloads, outcomes):
        grouped.setdefault((payload[0], payload[4].name), []).append(outcome)
        if progress is not None:
            progress(payload[0], payload[4].name, len(grouped[(payload[0], payload[4].name)]))

    cells: dict[tuple[str, str], CellResult] = {}
    for name, _ in datasets:
        for spec in algorithms:
            rows = grouped[(name, spec.name)]
            errors = [msg for _, _, msg, _, _ in rows if msg is not None]
            if errors:
                cells[(name, spec.name)] = CellResult((), (), error=errors[0])
            else:
                cells[(name, spec.name)] = CellResult(
                    accuracies=tuple(acc for _, _, _, acc, _ in rows),
                    complexities=tuple(compl for _, _, _, _, compl in rows),
                )
    return ExperimentReport(
        dataset_names=tuple(ds_names),
        algorithm_names=tuple(alg_names),
        n_folds=n_folds,
        n_repeats=n_repeats,
        seed=seed,
        cells=cells,
    )


def bootstrap_p(xs, ys, resamples: int = 10_000, seed: int = 0) -> float:
    """Paired bootstrap sign test.

    The statistic is the mean sign of the per-measurement differences.
    The signed differences are resampled with replacement and the
    fraction of bootstrap statistics landing on the opposite side of
    zero from the observed one is doubled (clamped to [0, 1]). Signs
    rather than raw means keep the test calibrated at ten measurements,
    where a plain mean bootstrap rejects a true null far above its
    nominal rate. A zero observed statistic (all-zero or sign-balanced
    differences) means the samples are indistinguishable: p = 1.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("bootstrap_p needs two equal-length 1-d samples")
    if x.size < 2:
        raise ValidationError("bootstrap_p needs at least 2 paired measurements")
    if resamples < 1:
        raise ValidationError(f"resamples must be >= 1, got {resamples}")
    signs = np.sign(x - y)
    observed = float(signs.mean())
    if observed == 0.0:
        return 1.0
    rng = spawn_rng(seed, "bootstrap")
    draws = rng.integers(0, signs.size, size=(resamples, signs.size))
    means = signs[draws].mean(axis=1)
    if observed > 0:
        tail = float(np.mean(means <= 0.0))
    else:
        tail = float(np.mean(means >= 0.0))
    return min(1.0, 2.0 * tail)


def build_wtl(
    report: ExperimentReport, alpha: float = 0.05, resamples: int = 10_000
) -> WTLMatrix:
    """Count wins, ties, and losses per ordered algorithm pair.

    A wins against B on a dataset iff A's mean accuracy is higher and the
    paired bootstrap p-value is below alpha. Pairs with a missing or
    failed cell count as ties and are flagged. The p-value seed depends
    only on the unordered pair, so the matrix is exactly antisymmetric.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    algs = report.algorithm_names
    counts = {(a, b): [0, 0, 0] for a in algs for b in algs}
    flagged: list[tuple[str, str, str]] = []
    for ds in report.dataset_names:
        for i, a in enumerate(algs):
            counts[(a, a)][1] += 1
            for b in algs[i + 1 :]:
                ca = report.cells.get((ds, a))
                cb = report.cells.get((ds, b))
                usable = (
                    ca is not None
                    and cb is not None
                    and ca.error is None
                    and cb.error is None
                    and len(ca.accuracies) >= 2
                    and len(cb.accuracies) >= 2
                )
                if not usable:
                    counts[(a, b)][1] += 1
                    counts[(b, a)][1] += 1
                    flagged.append((ds, a, b))
                    continue
                p = bootstrap_p(
                    ca.accuracies,
                    cb.accuracies,
                    resamples,
                    derive_seed(report.seed, "wtl", ds, *sorted((a, b))),
                )
                ma, mb = ca.mean_accuracy(), cb.mean_accuracy()
                if p < alpha and ma > mb:
                    counts[(a, b)][0] += 1
                    counts[(b, a)][2] += 1
                elif p < alpha and mb > ma:
                    counts[(a, b)][2] += 1
                    counts[(b, a)][0] += 1
                else:
                    counts[(a, b)][1] += 1
                    counts[(b, a)][1] += 1
    return WTLMatrix(
        algorithms=algs,
        alpha=alpha,
        cells={k: tuple(v) for k, v in counts.items()},
        flagged=tuple(flagged),
    )


def _cell_text(cell: CellResult, which: str) -> str:
    if cell.error is not None:
        return "error"
    if which == "accuracy":
        return f"{cell.mean_accuracy()}±{cell.std_accuracy()}"
    return f"{cell.mean_complexity()}±{cell.std_complexity()}"


def emit_report(report: ExperimentReport, wtl: WTLMatrix, out_dir) -> list[Path]:
    """Write results.json, accuracy.csv, complexity.csv, and wtl.csv.

    Output is deterministic: orderings follow the report, and numbers use
    Python's shortest round-trip float formatting.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    doc = {
        "n_folds": report.n_folds,
        "n_repeats": report.n_repeats,
        "seed": report.seed,
        "alpha": wtl.alpha,
        "datasets": list(report.dataset_names),
        "algorithms": list(report.algorithm_names),
        "cells": [
            {
                "dataset": ds,
                "algorithm": alg,
                "error": cell.error,
                "accuracies": list(cell.accuracies),
                "complexities": list(cell.complexities),
                "mean_accuracy": cell.mean_accuracy() if cell.error is None else None,
                "std_accuracy": cell.std_accuracy() if cell.error is None else None,
                "mean_complexity": cell.mean_complexity() if cell.error is None else None,
                "std_complexity": cell.std_complexity() if cell.error is None else None,
            }
            for ds in report.dataset_names
            for alg in report.algorithm_names
            for cell in [report.cells[(ds, alg)]]
        ],
        "win_tie_loss": [
            {
                "a": a,
                "b": b,
                "wins": wtl.cells[(a, b)][0],
                "ties": wtl.cells[(a, b)][1],
                "losses": wtl.cells[(a, b)][2],
            }
            for a in wtl.algorithms
            for b in wtl.algorithms
        ],
        "flagged_pairs": [list(t) for t in wtl.flagged],
    }
    paths = [out / "results.json"]
    paths[0].write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    for which in ("accuracy", "complexity"):
        path = out / f"{which}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["dataset", *report.algorithm_names])
            for ds in report.dataset_names:
                writer.writerow(
                    [ds]
                    + [
                        _cell_text(report.cells[(ds, alg)], which)
                        for alg in report.algorithm_names
                    ]
                )
        paths.append(path)

    path = out / "wtl.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm_a", "algorithm_b", "wins", "ties", "losses"])
        for a in wtl.algorithms:
            for b in wtl.algorithms:
                w, t, l = wtl.cells[(a, b)]
                writer.writerow([a, b, w, t, l])
    paths.append(path)
    return paths
