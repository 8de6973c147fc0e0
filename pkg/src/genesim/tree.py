"""Binary axis-parallel decision trees with value semantics.

An internal node routes a sample left when row[feature] <= threshold and
right otherwise. Leaves carry a class-probability distribution; the
predicted class is the argmax with ties broken toward the lowest index.

Trees are immutable. Editing operations (replace_subtree) return new
trees that share all untouched subtrees with the original. Node handles
are preorder positions stamped with a structural fingerprint of the tree
that issued them, so a handle is valid for any structurally identical
tree and rejected as stale everywhere else.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import Dataset
from .errors import ParseError, ValidationError

DISTRIBUTION_TOLERANCE = 1e-9
SERIAL_FORMAT = 1


@dataclass(frozen=True)
class Leaf:
    distribution: tuple[float, ...]

    def __post_init__(self):
        dist = tuple(float(x) for x in self.distribution)
        object.__setattr__(self, "distribution", dist)
        if not dist:
            raise ValidationError("leaf distribution is empty")
        if any(x < 0.0 for x in dist):
            raise ValidationError("leaf distribution has a negative entry")
        total = sum(dist)
        if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValidationError(f"leaf distribution sums to {total!r}, not 1")
        # cached, not a field: first index of the max, the tie-break winner
        object.__setattr__(self, "label", dist.index(max(dist)))


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"

    def __post_init__(self):
        object.__setattr__(self, "threshold", float(self.threshold))
        if not isinstance(self.feature, int) or isinstance(self.feature, bool):
            raise ValidationError(f"feature index must be an int, got {self.feature!r}")
        if self.feature < 0:
            raise ValidationError(f"feature index must be >= 0, got {self.feature}")
        if not np.isfinite(self.threshold):
            raise ValidationError(f"threshold must be finite, got {self.threshold}")
        for child in (self.left, self.right):
            if not isinstance(child, (Leaf, Split)):
                raise ValidationError(f"child nodes must be Leaf or Split, got {type(child)}")


Node = Union[Leaf, Split]


def _preorder(root: Node) -> list[Node]:
    out: list[Node] = []
    stack = [root]
    while stack:
        node = stack.pop()
        out.append(node)
        if isinstance(node, Split):
            stack.append(node.right)
            stack.append(node.left)
    return out


def _preorder_sizes(nodes: list[Node]) -> list[int]:
    # subtree size at each preorder position, computed right-to-left
    sizes = [0] * len(nodes)
    stack: list[int] = []
    for i in range(len(nodes) - 1, -1, -1):
        if isinstance(nodes[i], Split):
            s = stack.pop() + stack.pop() + 1
        else:
            s = 1
        sizes[i] = s
        stack.append(s)
    return sizes


@dataclass(frozen=True)
class DecisionTree:
    root: Node

    def __post_init__(self):
        if not isinstance(self.root, (Leaf, Split)):
            raise ValidationError(f"tree root must be Leaf or Split, got {type(self.root)}")
        nodes = _preorder(self.root)
        n_classes = None
        max_feature = -1
        for node in nodes:
            if isinstance(node, Leaf):
                if n_classes is None:
                    n_classes = len(node.distribution)
                elif len(node.distribution) != n_classes:
                    raise ValidationError("leaves disagree on the number of classes")
            else:
                max_feature = max(max_feature, node.feature)
        # cached metadata, not fields: equality still compares root only
        object.__setattr__(self, "size", len(nodes))
        object.__setattr__(self, "n_classes", n_classes)
        object.__setattr__(self, "max_feature", max_feature)
        object.__setattr__(self, "token", hash(self.root))


@dataclass(frozen=True)
class NodeHandle:
    """A reference to one node of a specific tree structure."""

    index: int
    token: int


def node_count(tree: DecisionTree) -> int:
    return tree.size


def predict(tree: DecisionTree, row) -> int:
    """Route one sample to a leaf and return its predicted class index."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] <= tree.max_feature:
        raise ValidationError(
            f"row has {row.shape} entries but the tree uses feature index {tree.max_feature}"
        )
    node = tree.root
    while isinstance(node, Split):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.label


def predict_batch(tree: DecisionTree, rows) -> np.ndarray:
    """Predict class indices for a matrix of samples."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] <= tree.max_feature:
        raise ValidationError(
            f"rows have shape {X.shape} but the tree uses feature index {tree.max_feature}"
        )
    out = np.empty(X.shape[0], dtype=np.int64)
    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = node.label
        else:
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def distribution_batch(tree: DecisionTree, rows) -> np.ndarray:
    """Return the leaf distribution each sample lands in, as an (n, C) array."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] <= tree.max_feature:
        raise ValidationError(
            f"rows have shape {X.shape} but the tree uses feature index {tree.max_feature}"
        )
    out = np.empty((X.shape[0], tree.n_classes), dtype=np.float64)
    stack = [(tree.root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = node.distribution
        else:
            mask = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
    return out


def accuracy(tree: DecisionTree, dataset: Dataset, indices) -> float:
    """Fraction of the indexed samples whose prediction matches the label."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("cannot compute accuracy on an empty index set")
    preds = predict_batch(tree, dataset.rows[idx])
    return float(np.mean(preds == dataset.labels[idx]))


def _check_handle(tree: DecisionTree, handle: NodeHandle) -> None:
    if handle.token != tree.token or not 0 <= handle.index < tree.size:
        raise ValidationError("stale or out-of-range node handle")


def list_internal_nodes(tree: DecisionTree) -> list[NodeHandle]:
    nodes = _preorder(tree.root)
    return [
        NodeHandle(i, tree.token) for i, nd in enumerate(nodes) if isinstance(nd, Split)
    ]


def list_subtree_roots(tree: DecisionTree) -> list[NodeHandle]:
    """Handles for every node, each seen as the root of its subtree."""
    return [NodeHandle(i, tree.token) for i in range(tree.size)]


def subtree_at(tree: DecisionTree, handle: NodeHandle) -> DecisionTree:
    _check_handle(tree, handle)
    nodes = _preorder(tree.root)
    return DecisionTree(nodes[handle.index])


def replace_subtree(
    tree: DecisionTree, handle: NodeHandle, subtree: DecisionTree
) -> DecisionTree:
    """Return a new tree with the node at handle swapped for subtree.

    The original tree is untouched; untouched branches are shared.
    """
    _check_handle(tree, handle)
    if subtree.n_classes != tree.n_classes:
        raise ValidationError(
            f"subtree has {subtree.n_classes} classes, tree has {tree.n_classes}"
        )
    nodes = _preorder(tree.root)
    sizes = _preorder_sizes(nodes)

    def rebuild(node: Node, base: int) -> Node:
        if base == handle.index:
            return subtree.root
        # the target lies strictly inside this subtree, so node is a Split
        left_size = sizes[base + 1]
        if handle.index <= base + left_size:
            return Split(node.feature, node.threshold, rebuild(node.left, base + 1), node.right)
        return Split(
            node.feature, node.threshold, node.left, rebuild(node.right, base + 1 + left_size)
        )

    return DecisionTree(rebuild(tree.root, 0))


def _node_to_obj(node: Node):
    if isinstance(node, Leaf):
        return {"distribution": list(node.distribution)}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_obj(node.left),
        "right": _node_to_obj(node.right),
    }


def serialize(tree: DecisionTree) -> str:
    """Render the tree as versioned JSON text."""
    doc = {"format": SERIAL_FORMAT, "tree": _node_to_obj(tree.root)}
    return json.dumps(doc, indent=2)


def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number, got {value!r}")
    return float(value)


def _node_from_obj(obj) -> Node:
    if not isinstance(obj, dict):
        raise ParseError(f"tree node must be an object, got {type(obj).__name__}")
    keys = set(obj)
    if keys == {"distribution"}:
        dist = obj["distribution"]
        if not isinstance(dist, list) or not dist:
            raise ParseError("leaf distribution must be a non-empty list")
        return Leaf(tuple(_require_number(x, "distribution entry") for x in dist))
    if keys == {"feature", "threshold", "left", "right"}:
        feature = obj["feature"]
        if isinstance(feature, bool) or not isinstance(feature, int):
            raise ParseError(f"feature must be an integer, got {feature!r}")
        threshold = _require_number(obj["threshold"], "threshold")
        return Split(
            feature, threshold, _node_from_obj(obj["left"]), _node_from_obj(obj["right"])
        )
    raise ParseError(f"unrecognized node keys {sorted(keys)}")


def deserialize(text: str) -> DecisionTree:
    """Parse JSON text produced by serialize back into a tree."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid tree JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("tree document must be a JSON object")
    if doc.get("format") != SERIAL_FORMAT:
        raise ParseError(f"unsupported tree format {doc.get('format')!r}")
    if "tree" not in doc:
        raise ParseError("tree document is missing the 'tree' field")
    try:
        return DecisionTree(_node_from_obj(doc["tree"]))
    except ValidationError as exc:
        raise ParseError(f"tree document violates structural rules: {exc}") from exc
