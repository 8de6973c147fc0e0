"""Merge decision-tree ensembles into single interpretable trees.

The package grows greedy trees, builds bagged and boosted committees
from them, converts trees to axis-aligned decision-space regions, merges
region sets by pairwise intersection, rebuilds trees from regions, and
runs a genetic search over merged trees. An evaluation layer compares
the result against its ingredients with repeated stratified
cross-validation and paired bootstrap tests.
"""

from .data import (
    CONTINUOUS,
    DISCRETE,
    Dataset,
    FeatureSpec,
    FoldPlan,
    load_csv,
    make_folds,
    read_manifest,
    split_half,
)
from .errors import ConfigError, GenesimError, ParseError, ValidationError
from .evaluation import (
    AlgorithmSpec,
    CellResult,
    ExperimentReport,
    WTLMatrix,
    bootstrap_p,
    build_wtl,
    emit_report,
    fit_algorithm,
    run_experiment,
)
from .genetic import (
    FitnessContext,
    GAConfig,
    Individual,
    mutate,
    recombine,
    replace,
    run_genesim,
    tournament_select,
)
from .induce import (
    EnsembleConfig,
    InduceConfig,
    bag,
    boost,
    bootstrap_indices,
    build_population_pool,
    entropy_impurity,
    gini_impurity,
    induce_tree,
)
from .seeding import derive_seed, spawn_rng
from .space import (
    Region,
    RegionSet,
    find_candidate_splits,
    merge_regions,
    naive_merge,
    region_set_from_json,
    region_set_to_json,
    regions_to_tree,
    tree_to_regions,
)
from .tree import (
    DecisionTree,
    Leaf,
    NodeHandle,
    Split,
    accuracy,
    deserialize,
    distribution_batch,
    list_internal_nodes,
    list_subtree_roots,
    node_count,
    predict,
    predict_batch,
    replace_subtree,
    serialize,
    subtree_at,
)

__version__ = "0.1.0"

__all__ = [
    "CONTINUOUS",
    "DISCRETE",
    "Dataset",
    "FeatureSpec",
    "FoldPlan",
    "load_csv",
    "make_folds",
    "read_manifest",
    "split_half",
    "ConfigError",
    "GenesimError",
    "ParseError",
    "ValidationError",
    "AlgorithmSpec",
    "CellResult",
    "ExperimentReport",
    "WTLMatrix",
    "bootstrap_p",
    "build_wtl",
    "emit_report",
    "fit_algorithm",
    "run_experiment",
    "FitnessContext",
    "GAConfig",
    "Individual",
    "mutate",
    "recombine",
    "replace",
    "run_genesim",
    "tournament_select",
    "EnsembleConfig",
    "InduceConfig",
    "bag",
    "boost",
    "bootstrap_indices",
    "build_population_pool",
    "entropy_impurity",
    "gini_impurity",
    "induce_tree",
    "derive_seed",
    "spawn_rng",
    "Region",
    "RegionSet",
    "find_candidate_splits",
    "merge_regions",
    "naive_merge",
    "region_set_from_json",
    "region_set_to_json",
    "regions_to_tree",
    "tree_to_regions",
    "DecisionTree",
    "Leaf",
    "NodeHandle",
    "Split",
    "accuracy",
    "deserialize",
    "distribution_batch",
    "list_internal_nodes",
    "list_subtree_roots",
    "node_count",
    "predict",
    "predict_batch",
    "replace_subtree",
    "serialize",
    "subtree_at",
    "__version__",
]
