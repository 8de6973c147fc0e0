"""The tournament-driven merging loop.

Starting from a pool of induced trees, each iteration recombines
tournament-selected parents by overlaying their decision spaces and
folding the overlay back into one tree, occasionally mutates the result,
and keeps the best population_size individuals of parents plus
offspring. Fitness is accuracy on a held-out validation half of the
training data, with fewer nodes breaking ties.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import Dataset, split_half
from .errors import ConfigError, ValidationError
from .induce import EnsembleConfig, bag, build_population_pool
from .seeding import derive_seed, spawn_rng
from .space import merge_regions, regions_to_tree, tree_to_regions
from .tree import (
    DecisionTree,
    Split,
    accuracy,
    list_internal_nodes,
    list_subtree_roots,
    node_count,
    replace_subtree,
    subtree_at,
)


@dataclass(frozen=True)
class Individual:
    """A candidate tree with its cached fitness components."""

    tree: DecisionTree
    accuracy: float
    node_count: int


def fitness_key(individual: Individual):
    """Sort key: higher accuracy first, then fewer nodes."""
    return (-individual.accuracy, individual.node_count)


def fitness_order(a: Individual, b: Individual) -> int:
    """-1 if a ranks before b, 1 if after, 0 on a full tie."""
    ka, kb = fitness_key(a), fitness_key(b)
    if ka < kb:
        return -1
    if ka > kb:
        return 1
    return 0


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 32
    iterations: int = 20
    tournament_size: int = 3
    offspring_per_iteration: int = 32
    mutation_probability: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.tournament_size < 2:
            raise ConfigError(f"tournament_size must be >= 2, got {self.tournament_size}")
        if self.tournament_size > self.population_size:
            raise ConfigError(
                f"tournament_size {self.tournament_size} exceeds population_size "
                f"{self.population_size}"
            )
        if self.offspring_per_iteration < 1:
            raise ConfigError(
                f"offspring_per_iteration must be >= 1, got {self.offspring_per_iteration}"
            )
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ConfigError(
                f"mutation_probability must be in [0, 1], got {self.mutation_probability}"
            )


@dataclass(frozen=True)
class FitnessContext:
    """Everything needed to score a tree: the data and the validation split."""

    dataset: Dataset
    validation_indices: np.ndarray

    def evaluate(self, tree: DecisionTree) -> Individual:
        return Individual(
            tree=tree,
            accuracy=accuracy(tree, self.dataset, self.validation_indices),
            node_count=node_count(tree),
        )


def tournament_select(
    population: list[Individual], tournament_size: int, rng: np.random.Generator
) -> Individual:
    """Draw tournament_size contestants with replacement; best one wins.

    Ties go to the earliest drawn contestant, so an all-tied population
    is sampled uniformly.
    """
    if not population:
        raise ValidationError("cannot select from an empty population")
    if tournament_size > len(population):
        raise ValidationError(
            f"tournament_size {tournament_size} exceeds population size {len(population)}"
        )
    draws = rng.integers(0, len(population), size=tournament_size)
    winner = min(draws, key=lambda i: fitness_key(population[i]))
    return population[int(winner)]


def recombine(
    parent_a: Individual,
    parent_b: Individual,
    context: FitnessContext,
    rng: np.random.Generator,
) -> Individual:
    """Overlay the parents' decision spaces and fold back into one tree.

    The offspring's leaf distributions are the means of the overlapping
    parent regions; its fitness is scored on the validation split.
    """
    k = context.dataset.n_features
    merged = merge_regions(
        tree_to_regions(parent_a.tree, k), tree_to_regions(parent_b.tree, k)
    )
    child = regions_to_tree(merged, rng)
    return context.evaluate(child)


def _swap_random_subtrees(
    tree: DecisionTree, rng: np.random.Generator
) -> DecisionTree | None:
    """Exchange two random subtrees, neither an ancestor of the other.

    Returns None when no such pair exists (a bare leaf).
    """
    handles = list_subtree_roots(tree)
    if len(handles) < 3:
        return None

    def nested(lo: int, hi: int) -> bool:
        return hi < lo + node_count(subtree_at(tree, handles[lo]))

    pair = None
    for _ in range(32):
        i, j = (int(x) for x in rng.integers(0, len(handles), size=2))
        if i == j:
            continue
        lo, hi = min(i, j), max(i, j)
        if not nested(lo, hi):
            pair = (lo, hi)
            break
    if pair is None:
        pairs = [
            (lo, hi)
            for lo in range(len(handles))
            for hi in range(lo + 1, len(handles))
            if not nested(lo, hi)
        ]
        if not pairs:
            return None
        pair = pairs[int(rng.integers(len(pairs)))]

    lo, hi = pair
    first = subtree_at(tree, handles[lo])
    second = subtree_at(tree, handles[hi])
    swapped = replace_subtree(tree, handles[lo], second)
    # preorder positions after the replaced span shift by the size delta
    new_hi = hi - node_count(first) + node_count(second)
    swapped_handles = list_subtree_roots(swapped)
    return replace_subtree(swapped, swapped_handles[new_hi], first)


def mutate(
    individual: Individual,
    context: FitnessContext,
    rng: np.random.Generator,
    probability: float,
) -> Individual:
    """With the given probability, perturb the tree and rescore it.

    The mutation is either replacing one random internal threshold with a
    uniform draw from that feature's observed range, or swapping two
    random non-nested subtrees; the type is chosen uniformly. A bare leaf
    has nothing to perturb and is returned unchanged.
    """
    if not 0.0 <= probability <= 1.0:
        raise ValidationError(f"mutation probability must be in [0, 1], got {probability}")
    if rng.random() >= probability:
        return individual
    tree = individual.tree
    if rng.integers(2) == 1:
        swapped = _swap_random_subtrees(tree, rng)
        if swapped is not None:
            return context.evaluate(swapped)
        # fall through to the threshold mutation
    internals = list_internal_nodes(tree)
    if not internals:
        return individual
    handle = internals[int(rng.integers(len(internals)))]
    node = subtree_at(tree, handle).root
    lo, hi = context.dataset.features[node.feature].observed_range
    fresh = float(rng.uniform(lo, hi))
    replacement = DecisionTree(Split(node.feature, fresh, node.left, node.right))
    return context.evaluate(replace_subtree(tree, handle, replacement))


def replace(
    population: list[Individual], offspring: list[Individual], population_size: int
) -> list[Individual]:
    """Keep the best population_size of parents plus offspring.

    The sort is stable with parents listed first, so on full fitness ties
    an incumbent survives rather than a newcomer.
    """
    merged = list(population) + list(offspring)
    merged.sort(key=fitness_key)
    return merged[:population_size]


def _write_trace(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "best_accuracy", "best_node_count", "mean_accuracy"])
        writer.writerows(rows)


def run_genesim(
    dataset: Dataset,
    train_indices,
    config: GAConfig,
    ensemble_config: EnsembleConfig | None = None,
    trace_path=None,
) -> DecisionTree:
    """Evolve one tree from an ensemble pool grown on the training data.

    The training indices are split in half: trees are grown on the grow
    half and scored on the validation half. The returned tree is the best
    individual of the final population; elitist replacement makes the
    best fitness non-decreasing over iterations. Fully deterministic for
    fixed inputs and seed.

    When trace_path is given, one CSV row per iteration records
    (iteration, best_accuracy, best_node_count, mean_accuracy).
    """
    if ensemble_config is None:
        ensemble_config = EnsembleConfig(seed=derive_seed(config.seed, "ensemble"))
    grow, validation = split_half(dataset, train_indices, config.seed)
    context = FitnessContext(dataset=dataset, validation_indices=validation)

    pool = build_population_pool(dataset, grow, ensemble_config)
    population = sorted((context.evaluate(t) for t in pool), key=fitness_key)
    if len(population) > config.population_size:
        population = population[: config.population_size]
    elif len(population) < config.population_size:
        fillers = bag(
            dataset,
            grow,
            ensemble_config.base_configs[0],
            config.population_size - len(population),
            derive_seed(config.seed, "pool-fill"),
        )
        population = sorted(
            population + [context.evaluate(t) for t in fillers], key=fitness_key
        )

    trace_rows = []
    for iteration in range(config.iterations):
        offspring = []
        for j in range(config.offspring_per_iteration):
            rng = spawn_rng(config.seed, "offspring", iteration, j)
            parent_a = tournament_select(population, config.tournament_size, rng)
            parent_b = tournament_select(population, config.tournament_size, rng)
            child = recombine(parent_a, parent_b, context, rng)
            child = mutate(child, context, rng, config.mutation_probability)
            offspring.append(child)
        population = replace(population, offspring, config.population_size)
        best = population[0]
        mean_acc = float(np.mean([ind.accuracy for ind in population]))
        trace_rows.append((iteration, best.accuracy, best.node_count, mean_acc))

    if trace_path is not None:
        _write_trace(trace_path, trace_rows)
    return population[0].tree
