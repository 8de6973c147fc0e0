"""Command line front end.

Four subcommands: induce (greedy single tree), genesim (ensemble merged
into one tree by the genetic search), benchmark (the full repeated-CV
comparison), and merge (combine two serialized trees). Trees go to
stdout as JSON; summaries and progress go to stderr, so stdout can be
piped. Exit codes: 0 success, 2 usage or input errors, 1 anything else.

The seed comes from --seed, else the GENESIM_SEED environment variable,
else 17.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import load_csv, make_folds, read_manifest
from .errors import ConfigError, GenesimError, ParseError
from .evaluation import AlgorithmSpec, build_wtl, emit_report, run_experiment
from .genetic import GAConfig, run_genesim
from .induce import CRITERIA, InduceConfig, induce_tree
from .seeding import derive_seed
from .space import merge_regions, regions_to_tree, tree_to_regions
from .tree import accuracy, deserialize, node_count, serialize

DEFAULT_SEED = 17


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("GENESIM_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"GENESIM_SEED must be an integer, got {env!r}")


def _load_dataset(csv_path: str, label: str | None, manifest: str | None):
    kinds = None
    manifest_label = None
    if manifest is not None:
        manifest_label, kinds = read_manifest(manifest)
    if label is None:
        label = manifest_label
    if label is None:
        raise ConfigError(
            f"no label column given for {csv_path}; pass --label or set "
            "label_column in the manifest"
        )
    return load_csv(csv_path, label, kinds)


def _add_dataset_args(sub: argparse.ArgumentParser):
    sub.add_argument("csv", help="training data as a CSV file with a header row")
    sub.add_argument("--label", help="name of the label column")
    sub.add_argument(
        "--manifest",
        help="JSON file mapping column names to feature kinds and/or "
        "marking the label column",
    )


def _cmd_induce(args) -> int:
    dataset = _load_dataset(args.csv, args.label, args.manifest)
    cfg = InduceConfig(
        criterion=args.criterion,
        max_depth=args.max_depth,
        min_samples_leaf=args.min_samples_leaf,
        min_samples_split=args.min_samples_split,
        seed=_resolve_seed(args.seed),
    )
    indices = np.arange(dataset.n_samples)
    tree = induce_tree(dataset, indices, cfg)
    print(serialize(tree))
    print(
        f"nodes={node_count(tree)} training_accuracy={accuracy(tree, dataset, indices)}",
        file=sys.stderr,
    )
    return 0


def _cmd_genesim(args) -> int:
    dataset = _load_dataset(args.csv, args.label, args.manifest)
    seed = _resolve_seed(args.seed)
    cfg = GAConfig(
        population_size=args.population,
        iterations=args.iterations,
        offspring_per_iteration=args.offspring,
        mutation_probability=args.mutation_probability,
        seed=seed,
    )
    # one stratified holdout fold for reporting; the rest is training
    plan = make_folds(dataset, 3, 1, derive_seed(seed, "cli-holdout"))
    holdout = plan.test_indices(0, 0)
    train = plan.train_indices(0, 0)
    tree = run_genesim(dataset, train, cfg, trace_path=args.trace)
    print(serialize(tree))
    print(
        f"nodes={node_count(tree)} holdout_accuracy={accuracy(tree, dataset, holdout)}",
        file=sys.stderr,
    )
    return 0


def _parse_benchmark_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read benchmark config {path}: {exc}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"benchmark config {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ParseError(f"benchmark config {path} must be a JSON object")
    return doc


def _cmd_benchmark(args) -> int:
    doc = _parse_benchmark_config(args.config)
    for key in ("datasets", "algorithms"):
        if key not in doc or not isinstance(doc[key], list) or not doc[key]:
            raise ConfigError(f"benchmark config needs a non-empty {key!r} list")

    datasets = []
    for i, entry in enumerate(doc["datasets"]):
        if not isinstance(entry, dict) or "name" not in entry or "csv" not in entry:
            raise ConfigError(f"datasets[{i}] needs at least name and csv")
        csv_path = entry["csv"]
        if not Path(csv_path).exists():
            raise ConfigError(f"datasets[{i}]: file not found: {csv_path}")
        manifest = entry.get("manifest")
        if manifest is not None and not Path(manifest).exists():
            raise ConfigError(f"datasets[{i}]: manifest not found: {manifest}")
        ds = _load_dataset(csv_path, entry.get("label"), manifest)
        datasets.append((entry["name"], ds))

    algorithms = []
    for i, entry in enumerate(doc["algorithms"]):
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise ConfigError(f"algorithms[{i}] needs name and kind")
        algorithms.append(
            AlgorithmSpec(
                name=entry["name"],
                kind=entry["kind"],
                parameters=entry.get("parameters", {}),
            )
        )

    n_folds = args.folds if args.folds is not None else int(doc.get("n_folds", 3))
    n_repeats = args.repeats if args.repeats is not None else int(doc.get("n_repeats", 10))
    seed = _resolve_seed(args.seed if args.seed is not None else doc.get("seed"))
    out_dir = args.output if args.output is not None else doc.get("output_dir")
    if out_dir is None:
        raise ConfigError("benchmark config needs output_dir (or pass --output)")

    def progress(ds_name: str, alg_name: str, done: int):
        print(f"{ds_name} / {alg_name}: repeat {done}/{n_repeats}", file=sys.stderr)

    report = run_experiment(
        datasets,
        algorithms,
        n_folds=n_folds,
        n_repeats=n_repeats,
        seed=seed,
        jobs=args.jobs,
        progress=progress,
    )
    wtl = build_wtl(report, alpha=args.alpha, resamples=args.resamples)
    paths = emit_report(report, wtl, out_dir)
    for p in paths:
        print(f"wrote {p}", file=sys.stderr)
    return 0


def _cmd_merge(args) -> int:
    trees = []
    for path in (args.tree_a, args.tree_b):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read tree file {path}: {exc}")
        trees.append(deserialize(text))
    a, b = trees
    if args.dimensions is not None:
        k = args.dimensions
    else:
        k = max(a.max_feature, b.max_feature) + 1
        if k == 0:
            raise ConfigError(
                "both trees are bare leaves; pass --dimensions to set the "
                "feature count"
            )
    merged = merge_regions(tree_to_regions(a, k), tree_to_regions(b, k))
    tree = regions_to_tree(merged, _resolve_seed(args.seed))
    print(serialize(tree))
    print(f"nodes={node_count(tree)} regions={merged.n_regions}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genesim",
        description="Grow decision trees, merge tree ensembles into single "
        "trees, and benchmark the results.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("induce", help="grow a single greedy decision tree")
    _add_dataset_args(p)
    p.add_argument("--criterion", choices=CRITERIA, default="gini")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=2)
    p.add_argument("--min-samples-split", type=int, default=4)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_induce)

    p = sub.add_parser(
        "genesim", help="merge an induced ensemble into one tree by genetic search"
    )
    _add_dataset_args(p)
    p.add_argument("--population", type=int, default=32)
    p.add_argument("--iterations", type=int, default=20)
    p.add_argument("--offspring", type=int, default=32)
    p.add_argument("--mutation-probability", type=float, default=0.1)
    p.add_argument("--trace", help="write per-iteration best/mean fitness CSV here")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_genesim)

    p = sub.add_parser("benchmark", help="run the repeated-CV comparison")
    p.add_argument("config", help="benchmark description as a JSON file")
    p.add_argument("--output", help="override the config's output_dir")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--resamples", type=int, default=10_000)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("merge", help="merge two serialized trees into one")
    p.add_argument("tree_a")
    p.add_argument("tree_b")
    p.add_argument(
        "--dimensions",
        type=int,
        default=None,
        help="feature count; default is one past the largest feature index used",
    )
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_merge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GenesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort catch for the CLI
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
