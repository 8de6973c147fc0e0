import json

import numpy as np
import pytest

from genesim.errors import ParseError, ValidationError
from genesim.tree import (
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

from helpers import dataset_from_arrays, random_tree, sample_window


def small_tree() -> DecisionTree:
    return DecisionTree(
        Split(
            0,
            0.5,
            Leaf((0.7, 0.2, 0.1)),
            Split(1, 0.25, Leaf((0.1, 0.8, 0.1)), Leaf((0.0, 0.1, 0.9))),
        )
    )


def test_leaf_validation():
    with pytest.raises(ValidationError):
        Leaf(())
    with pytest.raises(ValidationError):
        Leaf((0.5, -0.1, 0.6))
    with pytest.raises(ValidationError):
        Leaf((0.5, 0.4))  # sums to 0.9
    # first maximum wins label ties
    assert Leaf((0.4, 0.4, 0.2)).label == 0
    assert Leaf((0.2, 0.4, 0.4)).label == 1


def test_split_validation():
    leaf = Leaf((1.0,))
    with pytest.raises(ValidationError):
        Split(-1, 0.5, leaf, leaf)
    with pytest.raises(ValidationError):
        Split(0, float("nan"), leaf, leaf)
    with pytest.raises(ValidationError):
        Split(0, float("inf"), leaf, leaf)
    with pytest.raises(ValidationError):
        Split(True, 0.5, leaf, leaf)


def test_tree_caches_and_equality():
    t = small_tree()
    assert node_count(t) == 5
    assert t.n_classes == 3
    assert t.max_feature == 1
    same = DecisionTree(
        Split(
            0,
            0.5,
            Leaf((0.7, 0.2, 0.1)),
            Split(1, 0.25, Leaf((0.1, 0.8, 0.1)), Leaf((0.0, 0.1, 0.9))),
        )
    )
    assert t.root == same.root
    assert t.token == same.token


def test_mixed_leaf_widths_rejected():
    with pytest.raises(ValidationError):
        DecisionTree(Split(0, 0.5, Leaf((1.0,)), Leaf((0.5, 0.5))))


def test_predict_routing():
    t = small_tree()
    # threshold is inclusive on the left
    assert predict(t, [0.5, 0.9]) == 0
    assert predict(t, [0.6, 0.25]) == 1
    assert predict(t, [0.6, 0.26]) == 2
    with pytest.raises(ValidationError):
        predict(t, [0.5])  # too short for max_feature 1


def test_predict_batch_matches_predict():
    rng = np.random.default_rng(21)
    for _ in range(25):
        k = int(rng.integers(1, 5))
        t = random_tree(rng, k, max_depth=5)
        pts = sample_window(rng, 200, k)
        batch = predict_batch(t, pts)
        single = np.array([predict(t, row) for row in pts])
        assert np.array_equal(batch, single)
        dists = distribution_batch(t, pts)
        assert np.array_equal(np.argmax(dists, axis=1), single)


def test_accuracy():
    t = small_tree()
    rows = np.array([[0.4, 0.0], [0.6, 0.2], [0.6, 0.9], [0.4, 0.5]])
    labels = np.array([0, 1, 2, 1])
    ds = dataset_from_arrays(rows, labels, ("a", "b", "c"))
    idx = np.arange(4)
    assert accuracy(t, ds, idx) == 0.75
    with pytest.raises(ValidationError):
        accuracy(t, ds, np.array([], dtype=np.int64))


def test_handles_enumeration():
    t = small_tree()
    internal = list_internal_nodes(t)
    assert [h.index for h in internal] == [0, 2]
    all_nodes = list_subtree_roots(t)
    assert [h.index for h in all_nodes] == [0, 1, 2, 3, 4]
    sub = subtree_at(t, internal[1])
    assert isinstance(sub.root, Split) and sub.root.feature == 1


def test_stale_handle_rejected():
    t = small_tree()
    other = DecisionTree(Split(0, 0.9, Leaf((1.0, 0.0, 0.0)), Leaf((0.0, 1.0, 0.0))))
    handle = list_subtree_roots(t)[3]
    with pytest.raises(ValidationError, match="stale"):
        subtree_at(other, handle)
    with pytest.raises(ValidationError, match="stale"):
        subtree_at(t, NodeHandle(99, t.token))


def test_replace_subtree():
    t = small_tree()
    handle = list_subtree_roots(t)[3]  # inner-right leaf
    new_leaf = DecisionTree(Leaf((0.9, 0.05, 0.05)))
    t2 = replace_subtree(t, handle, new_leaf)
    assert node_count(t2) == 5
    assert predict(t2, [0.6, 0.2]) == 0
    # original untouched, left subtree shared
    assert predict(t, [0.6, 0.2]) == 1
    assert t2.root.left is t.root.left


def test_replace_subtree_at_root():
    t = small_tree()
    root_handle = list_subtree_roots(t)[0]
    t2 = replace_subtree(t, root_handle, DecisionTree(Leaf((1.0, 0.0, 0.0))))
    assert node_count(t2) == 1
    with pytest.raises(ValidationError, match="class"):
        replace_subtree(t, root_handle, DecisionTree(Leaf((1.0, 0.0))))


def test_replace_subtree_random_roundtrip():
    rng = np.random.default_rng(77)
    for _ in range(30):
        t = random_tree(rng, 3, max_depth=5)
        handles = list_subtree_roots(t)
        h = handles[int(rng.integers(len(handles)))]
        sub = subtree_at(t, h)
        t2 = replace_subtree(t, h, sub)
        assert t2.root == t.root


def test_serialize_roundtrip_random():
    rng = np.random.default_rng(3)
    for _ in range(40):
        t = random_tree(rng, int(rng.integers(1, 5)), max_depth=6)
        again = deserialize(serialize(t))
        assert again.root == t.root


def test_serialized_shape():
    doc = json.loads(serialize(small_tree()))
    assert doc["format"] == 1
    root = doc["tree"]
    assert set(root) == {"feature", "threshold", "left", "right"}
    assert set(root["left"]) == {"distribution"}


def test_deserialize_rejects_malformed():
    cases = [
        "not json",
        '{"format": 1}',
        '{"format": 2, "tree": {"distribution": [1.0]}}',
        '{"format": 1, "tree": {"distribution": [0.5]}}',
        '{"format": 1, "tree": {"feature": 0, "threshold": 0.5, "left": {"distribution": [1.0]}}}',
        '{"format": 1, "tree": {"feature": 0.5, "threshold": 0.5, '
        '"left": {"distribution": [1.0]}, "right": {"distribution": [1.0]}}}',
        '{"format": 1, "tree": {"distribution": [1.0], "extra": 1}}',
        '{"format": 1, "tree": {"feature": true, "threshold": 0.5, '
        '"left": {"distribution": [1.0]}, "right": {"distribution": [1.0]}}}',
        "[]",
    ]
    for text in cases:
        with pytest.raises(ParseError):
            deserialize(text)
