"""Greedy tree induction plus the bagging/boosting pool builders.

The genetic merging loop starts from a pool of trees grown by one greedy
top-down inducer under two split criteria, diversified with bootstrap
resampling (bagging) and a multiclass adaptive reweighting loop (boosting
by weight-proportional resampling). Boosted rounds are consumed as
individual trees, not as a weighted committee.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .data import Dataset
from .errors import ConfigError, ValidationError
from .seeding import derive_seed, spawn_rng
from .tree import DecisionTree, Leaf, Node, Split, predict_batch

GINI = "gini"
ENTROPY = "entropy"
CRITERIA = (GINI, ENTROPY)

# impurity decreases this small are treated as zero (float round-off guard)
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class InduceConfig:
    """Knobs for one greedy induction run.

    max_depth of None means unlimited. The seed is carried for interface
    uniformity with the resampling builders; plain greedy induction is
    deterministic and does not consume it.
    """

    criterion: str = GINI
    max_depth: int | None = None
    min_samples_leaf: int = 2
    min_samples_split: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ConfigError(
                f"criterion must be one of {CRITERIA}, got {self.criterion!r}"
            )
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}"
            )
        if self.min_samples_split < 2:
            raise ConfigError(
                f"min_samples_split must be >= 2, got {self.min_samples_split}"
            )


def _default_base_configs() -> tuple[InduceConfig, ...]:
    return (InduceConfig(criterion=GINI), InduceConfig(criterion=ENTROPY))


@dataclass(frozen=True)
class EnsembleConfig:
    """Recipe for the initial tree pool.

    Each base config contributes one plain tree, bagging_rounds bagged
    trees, and boosting_rounds boosted trees grown with its criterion, so
    the default pool is 2 * (1 + 10) + 2 * 5 = 32 trees.
    """

    base_configs: tuple[InduceConfig, ...] = field(default_factory=_default_base_configs)
    bagging_rounds: int = 10
    boosting_rounds: int = 5
    boost_max_depth: int = 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "base_configs", tuple(self.base_configs))
        if not self.base_configs:
            raise ConfigError("at least one base induction config is required")
        if self.bagging_rounds < 0:
            raise ConfigError(f"bagging_rounds must be >= 0, got {self.bagging_rounds}")
        if self.boosting_rounds < 0:
            raise ConfigError(
                f"boosting_rounds must be >= 0, got {self.boosting_rounds}"
            )
        if self.boost_max_depth < 1:
            raise ConfigError(f"boost_max_depth must be >= 1, got {self.boost_max_depth}")


def gini_impurity(probabilities) -> float:
    """1 - sum(p^2) of a class-probability vector."""
    p = np.asarray(probabilities, dtype=np.float64)
    return float(1.0 - (p * p).sum())


def entropy_impurity(probabilities) -> float:
    """Shannon entropy in bits, with 0 * log(0) taken as 0."""
    p = np.asarray(probabilities, dtype=np.float64)
    logs = np.zeros_like(p)
    np.log2(p, out=logs, where=p > 0)
    return float(-(p * logs).sum())


def _impurity_rows(counts: np.ndarray, totals: np.ndarray, criterion: str) -> np.ndarray:
    # counts: (m, C) class counts per candidate side; totals: (m,)
    p = counts / totals[:, None]
    if criterion == GINI:
        return 1.0 - (p * p).sum(axis=1)
    logs = np.zeros_like(p)
    np.log2(p, out=logs, where=p > 0)
    return -(p * logs).sum(axis=1)


def _best_split(
    X: np.ndarray, y: np.ndarray, n_classes: int, cfg: InduceConfig
) -> tuple[int, float] | None:
    """Exhaustive search over midpoint thresholds of every feature.

    Returns the (feature, threshold) with the largest impurity decrease,
    or None when no candidate has a positive decrease. Ties keep the
    lowest feature index, then the lowest threshold.
    """
    n = X.shape[0]
    parent_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent_imp = _impurity_rows(parent_counts[None, :], np.array([n], float), cfg.criterion)[0]
    best_gain = _MIN_GAIN
    best: tuple[int, float] | None = None
    msl = cfg.min_samples_leaf
    for f in range(X.shape[1]):
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        sv = values[order]
        sy = y[order]
        one_hot = np.zeros((n, n_classes), dtype=np.float64)
        one_hot[np.arange(n), sy] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_sizes = np.arange(1, n)
        usable = (sv[:-1] < sv[1:]) & (left_sizes >= msl) & (n - left_sizes >= msl)
        pos = np.nonzero(usable)[0]
        if pos.size == 0:
            continue
        nl = (pos + 1).astype(np.float64)
        nr = n - nl
        left_counts = cum[pos]
        right_counts = parent_counts[None, :] - left_counts
        child = (
            nl * _impurity_rows(left_counts, nl, cfg.criterion)
            + nr * _impurity_rows(right_counts, nr, cfg.criterion)
        ) / n
        gains = parent_imp - child
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            threshold = (sv[pos[j]] + sv[pos[j] + 1]) / 2.0
            best = (f, float(threshold))
    return best


def _laplace_leaf(y: np.ndarray, n_classes: int) -> Leaf:
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    dist = (counts + 1.0) / (y.shape[0] + n_classes)
    return Leaf(tuple(dist))


def _grow(X: np.ndarray, y: np.ndarray, depth: int, n_classes: int, cfg: InduceConfig) -> Node:
    n = y.shape[0]
    if (
        n < cfg.min_samples_split
        or (cfg.max_depth is not None and depth >= cfg.max_depth)
        or (y == y[0]).all()
    ):
        return _laplace_leaf(y, n_classes)
    found = _best_split(X, y, n_classes, cfg)
    if found is None:
        return _laplace_leaf(y, n_classes)
    f, threshold = found
    mask = X[:, f] <= threshold
    return Split(
        f,
        threshold,
        _grow(X[mask], y[mask], depth + 1, n_classes, cfg),
        _grow(X[~mask], y[~mask], depth + 1, n_classes, cfg),
    )


def induce_tree(dataset: Dataset, indices, config: InduceConfig | None = None) -> DecisionTree:
    """Grow one tree greedily on the indexed samples.

    Thresholds are midpoints between consecutive distinct sorted feature
    values; every accepted split has a strictly positive impurity
    decrease and leaves with at least min_samples_leaf samples. Leaf
    distributions are class frequencies with one ghost count per class.
    """
    cfg = config or InduceConfig()
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("cannot induce a tree on an empty index set")
    X = dataset.rows[idx]
    y = dataset.labels[idx]
    return DecisionTree(_grow(X, y, 0, dataset.n_classes, cfg))


def bootstrap_indices(rng: np.random.Generator, indices: np.ndarray) -> np.ndarray:
    """Draw one bootstrap resample: |indices| draws with replacement."""
    idx = np.asarray(indices, dtype=np.int64)
    return rng.choice(idx, size=idx.size, replace=True)


def bag(
    dataset: Dataset, indices, config: InduceConfig, rounds: int, seed: int
) -> list[DecisionTree]:
    """Grow `rounds` trees, each on an independent bootstrap resample."""
    if rounds < 1:
        raise ValidationError(f"bagging needs rounds >= 1, got {rounds}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("cannot bag on an empty index set")
    trees = []
    for r in range(rounds):
        rng = spawn_rng(seed, "bag", r)
        trees.append(induce_tree(dataset, bootstrap_indices(rng, idx), config))
    return trees


def boost_rounds(
    dataset: Dataset,
    indices,
    rounds: int,
    max_depth: int,
    seed: int,
    criterion: str = GINI,
) -> Iterator[tuple[DecisionTree, float, np.ndarray]]:
    """Run the adaptive reweighting loop, yielding per emitted round.

    Each round draws a weight-proportional resample, grows a depth-capped
    tree on it, and scores the tree's weighted error e on the original
    samples under the current weights. A round with e = 0 is emitted and
    the loop stops; a round with e >= 1 - 1/n_classes stops the loop
    without being emitted. Otherwise the tree is emitted, misclassified
    weights are multiplied by (1 - e) * (n_classes - 1) / e, and weights
    are renormalized.

    Yields (tree, weighted_error, weights_used_this_round).
    """
    if rounds < 1:
        raise ValidationError(f"boosting needs rounds >= 1, got {rounds}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("cannot boost on an empty index set")
    cfg = InduceConfig(
        criterion=criterion, max_depth=max_depth, min_samples_leaf=1, min_samples_split=2
    )
    X = dataset.rows[idx]
    y = dataset.labels[idx]
    n = idx.size
    n_classes = dataset.n_classes
    weights = np.full(n, 1.0 / n)
    for r in range(rounds):
        rng = spawn_rng(seed, "boost", r)
        sample = rng.choice(idx, size=n, replace=True, p=weights)
        tree = induce_tree(dataset, sample, cfg)
        miss = predict_batch(tree, X) != y
        eps = float(weights[miss].sum())
        if eps >= 1.0 - 1.0 / n_classes:
            return
        yield tree, eps, weights.copy()
        if eps == 0.0:
            return
        factor = (1.0 - eps) * (n_classes - 1) / eps
        weights = np.where(miss, weights * factor, weights)
        weights /= weights.sum()


def boost(
    dataset: Dataset,
    indices,
    rounds: int,
    max_depth: int,
    seed: int,
    criterion: str = GINI,
) -> list[DecisionTree]:
    """Return the trees emitted by the reweighting loop (up to `rounds`)."""
    return [tree for tree, _, _ in boost_rounds(dataset, indices, rounds, max_depth, seed, criterion)]


def build_population_pool(
    dataset: Dataset, indices, config: EnsembleConfig
) -> list[DecisionTree]:
    """Grow the initial pool: per base config, one plain tree plus its
    bagged and boosted variants. Deterministic for a fixed config seed."""
    trees: list[DecisionTree] = []
    for b, base in enumerate(config.base_configs):
        trees.append(induce_tree(dataset, indices, base))
        if config.bagging_rounds > 0:
            trees.extend(
                bag(
                    dataset,
                    indices,
                    base,
                    config.bagging_rounds,
                    derive_seed(config.seed, "pool-bag", b),
                )
            )
        if config.boosting_rounds > 0:
            trees.extend(
                boost(
                    dataset,
                    indices,
                    config.boosting_rounds,
                    config.boost_max_depth,
                    derive_seed(config.seed, "pool-boost", b),
                    criterion=base.criterion,
                )
            )
    return trees
