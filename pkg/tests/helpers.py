"""Shared generators for randomized tests.

Everything takes an explicit numpy Generator so test modules control
their own seeds.
"""

from __future__ import annotations

import numpy as np

from genesim.data import Dataset, FeatureSpec
from genesim.space import Region, RegionSet
from genesim.tree import DecisionTree, Leaf, Split


def random_distribution(rng: np.random.Generator, n_classes: int) -> tuple:
    raw = rng.uniform(0.05, 1.0, size=n_classes)
    raw = raw / raw.sum()
    return tuple(float(v) for v in raw)


def random_tree(
    rng: np.random.Generator,
    k: int,
    max_depth: int,
    n_classes: int = 3,
    leaf_prob: float = 0.25,
) -> DecisionTree:
    """A random tree whose split thresholds stay inside the unit box.

    Thresholds are drawn within the current path's open interval per
    feature, so every leaf's box is non-empty and every split is
    reachable.
    """

    def grow(depth: int, lows: np.ndarray, highs: np.ndarray):
        if depth >= max_depth or rng.random() < leaf_prob:
            return Leaf(random_distribution(rng, n_classes))
        d = int(rng.integers(k))
        span = highs[d] - lows[d]
        t = float(lows[d] + span * rng.uniform(0.05, 0.95))
        left_highs = highs.copy()
        left_highs[d] = t
        right_lows = lows.copy()
        right_lows[d] = t
        return Split(d, t, grow(depth + 1, lows, left_highs), grow(depth + 1, right_lows, highs))

    lows = np.zeros(k)
    highs = np.ones(k)
    root = grow(0, lows, highs)
    if isinstance(root, Leaf):
        # force at least one split so the tree partitions something
        t = float(rng.uniform(0.2, 0.8))
        root = Split(0, t, Leaf(random_distribution(rng, n_classes)), root)
    return DecisionTree(root)


def random_region_set(
    rng: np.random.Generator,
    k: int,
    n_regions: int,
    n_classes: int = 3,
    unbounded_prob: float = 0.15,
) -> RegionSet:
    """Random possibly-overlapping boxes; some faces open to infinity."""
    regions = []
    for _ in range(n_regions):
        bounds = []
        for _ in range(k):
            lo = float(rng.uniform(-1.0, 1.0))
            hi = lo + float(rng.uniform(0.05, 1.2))
            if rng.random() < unbounded_prob:
                lo = float("-inf")
            if rng.random() < unbounded_prob:
                hi = float("inf")
            bounds.append((lo, hi))
        regions.append(Region(tuple(bounds), random_distribution(rng, n_classes)))
    return RegionSet.from_regions(regions)


def sample_window(rng: np.random.Generator, n_points: int, k: int) -> np.ndarray:
    """Points spread over and beyond the unit box used by random_tree."""
    return rng.uniform(-0.5, 1.5, size=(n_points, k))


def dataset_from_arrays(rows, labels, class_names=None) -> Dataset:
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if class_names is None:
        class_names = tuple(f"c{i}" for i in range(int(labels.max()) + 1))
    features = tuple(
        FeatureSpec(
            f"f{j}",
            "continuous",
            (float(rows[:, j].min()), float(rows[:, j].max())),
        )
        for j in range(rows.shape[1])
    )
    return Dataset(features, rows, labels, tuple(class_names))
