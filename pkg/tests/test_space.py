import time

import numpy as np
import pytest

from genesim.errors import ParseError, ValidationError
from genesim.space import (
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
from genesim.tree import DecisionTree, Leaf, Split, predict_batch

from helpers import random_region_set, random_tree, sample_window

INF = float("inf")


def small_tree() -> DecisionTree:
    return DecisionTree(
        Split(
            0,
            0.5,
            Leaf((0.7, 0.2, 0.1)),
            Split(1, 0.25, Leaf((0.1, 0.8, 0.1)), Leaf((0.0, 0.1, 0.9))),
        )
    )


def canonical_arrays(rs: RegionSet):
    c = rs.canonical()
    return c.lowers, c.uppers, c.distributions


def assert_same_regions(a: RegionSet, b: RegionSet):
    la, ua, da = canonical_arrays(a)
    lb, ub, db = canonical_arrays(b)
    assert np.array_equal(la, lb)
    assert np.array_equal(ua, ub)
    assert np.array_equal(da, db)


def test_region_validation():
    with pytest.raises(ValidationError):
        Region(((1.0, 1.0),), (1.0,))
    with pytest.raises(ValidationError):
        Region(((2.0, 1.0),), (1.0,))
    with pytest.raises(ValidationError):
        Region(((0.0, 1.0),), (0.5, 0.6))
    with pytest.raises(ValidationError):
        Region(((0.0, 1.0),), (-0.1, 1.1))
    with pytest.raises(ValidationError):
        Region((), (1.0,))


def test_region_set_construction():
    r1 = Region(((0.0, 1.0), (0.0, 2.0)), (0.5, 0.5))
    r2 = Region(((-INF, 0.0), (1.0, INF)), (1.0, 0.0))
    rs = RegionSet.from_regions([r1, r2])
    assert rs.n_regions == 2
    assert rs.k == 2
    assert rs.regions == (r1, r2)
    with pytest.raises(ValueError):
        rs.lowers[0, 0] = 5.0
    with pytest.raises(ValidationError):
        RegionSet.from_regions([], k=None)
    r3 = Region(((0.0, 1.0),), (0.5, 0.5))
    with pytest.raises(ValidationError):
        RegionSet.from_regions([r1, r3])


def test_membership_half_open():
    rs = RegionSet.from_regions([Region(((0.0, 1.0),), (1.0,))])
    m = rs.membership(np.array([[0.0], [0.5], [1.0], [1.5]]))
    assert m[:, 0].tolist() == [False, True, True, False]


def test_canonical_is_shuffle_invariant():
    rng = np.random.default_rng(31)
    for _ in range(10):
        rs = random_region_set(rng, k=3, n_regions=24)
        perm = rng.permutation(rs.n_regions)
        shuffled = RegionSet(
            k=3,
            lowers=rs.lowers[perm],
            uppers=rs.uppers[perm],
            distributions=rs.distributions[perm],
        )
        assert_same_regions(rs, shuffled)
        c = rs.canonical()
        assert_same_regions(c, c.canonical())


def test_tree_to_regions_small():
    rs = tree_to_regions(small_tree(), 2)
    assert rs.n_regions == 3
    expected = {
        ((-INF, 0.5), (-INF, INF)): (0.7, 0.2, 0.1),
        ((0.5, INF), (-INF, 0.25)): (0.1, 0.8, 0.1),
        ((0.5, INF), (0.25, INF)): (0.0, 0.1, 0.9),
    }
    for region in rs.regions:
        assert expected[region.bounds] == region.distribution


def test_tree_to_regions_drops_unreachable():
    t = DecisionTree(
        Split(
            0,
            0.5,
            Split(0, 0.7, Leaf((1.0, 0.0)), Leaf((0.0, 1.0))),
            Leaf((0.5, 0.5)),
        )
    )
    rs = tree_to_regions(t, 1)
    # the branch x0 > 0.7 under x0 <= 0.5 is empty
    assert rs.n_regions == 2
    bounds = sorted(r.bounds for r in rs.regions)
    assert bounds == [((-INF, 0.5),), ((0.5, INF),)]


def test_tree_to_regions_extra_dimensions():
    rs = tree_to_regions(small_tree(), 4)
    assert rs.k == 4
    assert all(r.bounds[2] == (-INF, INF) for r in rs.regions)
    with pytest.raises(ValidationError):
        tree_to_regions(small_tree(), 1)


def test_tree_regions_partition_random():
    rng = np.random.default_rng(52)
    for _ in range(30):
        k = int(rng.integers(1, 5))
        t = random_tree(rng, k, max_depth=5)
        rs = tree_to_regions(t, k)
        pts = sample_window(rng, 400, k)
        counts = rs.membership(pts).sum(axis=1)
        assert (counts == 1).all()


def test_merge_single_pair_mean():
    a = RegionSet.from_regions([Region(((0.0, 2.0), (0.0, 2.0)), (1.0, 0.0))])
    b = RegionSet.from_regions([Region(((1.0, 3.0), (1.0, 3.0)), (0.0, 1.0))])
    merged = merge_regions(a, b)
    assert merged.n_regions == 1
    region = merged.regions[0]
    assert region.bounds == ((1.0, 2.0), (1.0, 2.0))
    assert region.distribution == (0.5, 0.5)


def test_merge_disjoint_is_empty():
    a = RegionSet.from_regions([Region(((0.0, 1.0),), (1.0,))])
    b = RegionSet.from_regions([Region(((2.0, 3.0),), (1.0,))])
    assert merge_regions(a, b).n_regions == 0
    # touching at a point is still empty: bounds are (lower, upper]
    c = RegionSet.from_regions([Region(((1.0, 2.0),), (1.0,))])
    assert merge_regions(a, c).n_regions == 0


def test_merge_empty_input():
    a = RegionSet(k=2, lowers=np.empty((0, 2)), uppers=np.empty((0, 2)), distributions=np.empty((0, 0)))
    b = RegionSet.from_regions([Region(((0.0, 1.0), (0.0, 1.0)), (1.0,))])
    assert merge_regions(a, b).n_regions == 0
    assert merge_regions(b, a).n_regions == 0


def test_merge_mismatch_errors():
    a = RegionSet.from_regions([Region(((0.0, 1.0),), (1.0,))])
    b = RegionSet.from_regions([Region(((0.0, 1.0), (0.0, 1.0)), (1.0,))])
    with pytest.raises(ValidationError, match="k="):
        merge_regions(a, b)
    c = RegionSet.from_regions([Region(((0.0, 1.0),), (0.5, 0.5))])
    with pytest.raises(ValidationError, match="classes"):
        merge_regions(a, c)


def test_merge_domain_intersection():
    a = RegionSet.from_regions([Region(((0.0, 2.0),), (1.0,))], domain=((-1.0, 5.0),)
    )
    b = RegionSet.from_regions([Region(((1.0, 3.0),), (1.0,))], domain=((0.0, 9.0),)
    )
    merged = merge_regions(a, b)
    assert merged.domain == ((0.0, 5.0),)


def test_merge_matches_naive_random():
    rng = np.random.default_rng(99)
    for _ in range(60):
        k = int(rng.integers(1, 5))
        n_classes = int(rng.integers(2, 4))
        a = random_region_set(rng, k, int(rng.integers(1, 40)), n_classes)
        b = random_region_set(rng, k, int(rng.integers(1, 40)), n_classes)
        assert_same_regions(merge_regions(a, b), naive_merge(a, b))


def test_merge_commutes():
    rng = np.random.default_rng(7)
    for _ in range(15):
        a = random_region_set(rng, 3, 20)
        b = random_region_set(rng, 3, 20)
        assert_same_regions(merge_regions(a, b), merge_regions(b, a))


def test_merge_partition_with_itself():
    rng = np.random.default_rng(13)
    for _ in range(15):
        k = int(rng.integers(1, 4))
        rs = tree_to_regions(random_tree(rng, k, max_depth=4), k)
        assert_same_regions(merge_regions(rs, rs), rs)


def test_merge_of_partitions_is_partition():
    rng = np.random.default_rng(41)
    for _ in range(15):
        k = int(rng.integers(1, 4))
        ta = random_tree(rng, k, max_depth=4)
        tb = random_tree(rng, k, max_depth=4)
        merged = merge_regions(tree_to_regions(ta, k), tree_to_regions(tb, k))
        pts = sample_window(rng, 300, k)
        assert (merged.membership(pts).sum(axis=1) == 1).all()


def test_find_candidate_splits_small():
    rs = tree_to_regions(small_tree(), 2)
    full = ((-INF, INF), (-INF, INF))
    # x1 = 0.25 slices the left leaf's interior, so only x0 = 0.5 is clean
    assert find_candidate_splits(rs, full) == [(0, 0.5)]
    right = ((0.5, INF), (-INF, INF))
    assert find_candidate_splits(rs, right) == [(1, 0.25)]
    bounded = RegionSet.from_regions([Region(((0.0, 1.0), (0.0, 1.0)), (1.0, 0.0, 0.0))])
    assert find_candidate_splits(bounded, ((5.0, 6.0), (-INF, INF))) == []
    with pytest.raises(ValidationError):
        find_candidate_splits(rs, ((-INF, INF),))


def test_find_candidate_splits_sorted_and_interior():
    rng = np.random.default_rng(17)
    for _ in range(20):
        k = int(rng.integers(1, 4))
        t = random_tree(rng, k, max_depth=4)
        rs = tree_to_regions(t, k)
        box = tuple((-INF, INF) for _ in range(k))
        cands = find_candidate_splits(rs, box)
        assert cands == sorted(cands)
        lowers, uppers = rs.lowers, rs.uppers
        for d, v in cands:
            assert np.isfinite(v)
            # a clean plane slices no region interior
            assert not ((lowers[:, d] < v) & (v < uppers[:, d])).any()


def test_regions_to_tree_single_region():
    rs = RegionSet.from_regions([Region(((0.0, 1.0), (0.0, 1.0)), (0.3, 0.7))])
    t = regions_to_tree(rs, 0)
    assert isinstance(t.root, Leaf)
    assert t.root.distribution == (0.3, 0.7)


def test_regions_to_tree_unanimous_argmax():
    rs = RegionSet.from_regions([
            Region(((0.0, 1.0),), (0.6, 0.4)),
            Region(((1.0, 2.0),), (0.8, 0.2)),
        ],
    )
    t = regions_to_tree(rs, 0)
    assert isinstance(t.root, Leaf)
    assert t.root.distribution == (0.7, 0.30000000000000004)


def test_regions_to_tree_empty():
    rs = RegionSet(k=1, lowers=np.empty((0, 1)), uppers=np.empty((0, 1)), distributions=np.empty((0, 0)))
    with pytest.raises(ValidationError):
        regions_to_tree(rs, 0)


def test_regions_to_tree_roundtrip_random():
    rng = np.random.default_rng(23)
    for _ in range(30):
        k = int(rng.integers(1, 5))
        t = random_tree(rng, k, max_depth=5)
        rs = tree_to_regions(t, k)
        rebuilt = regions_to_tree(rs, int(rng.integers(1 << 30)))
        pts = sample_window(rng, 300, k)
        assert np.array_equal(predict_batch(rebuilt, pts), predict_batch(t, pts))


def test_regions_to_tree_on_merged_overlay():
    rng = np.random.default_rng(29)
    for _ in range(15):
        k = int(rng.integers(1, 4))
        ta = random_tree(rng, k, max_depth=4)
        tb = random_tree(rng, k, max_depth=4)
        merged = merge_regions(tree_to_regions(ta, k), tree_to_regions(tb, k))
        rebuilt = regions_to_tree(merged, int(rng.integers(1 << 30)))
        pts = sample_window(rng, 300, k)
        member = merged.membership(pts)
        assert (member.sum(axis=1) == 1).all()
        region_labels = np.argmax(merged.distributions[np.argmax(member, axis=1)], axis=1)
        assert np.array_equal(predict_batch(rebuilt, pts), region_labels)


def test_regions_to_tree_deterministic():
    rng = np.random.default_rng(47)
    ta = random_tree(rng, 3, max_depth=4)
    tb = random_tree(rng, 3, max_depth=4)
    merged = merge_regions(tree_to_regions(ta, 3), tree_to_regions(tb, 3))
    t1 = regions_to_tree(merged, 5)
    t2 = regions_to_tree(merged, 5)
    t3 = regions_to_tree(merged, np.random.default_rng(5))
    assert t1.root == t2.root == t3.root


def pinwheel() -> RegionSet:
    # four boxes around a central hole; no plane avoids every interior
    return RegionSet.from_regions([
            Region(((0.0, 2.0), (0.0, 1.0)), (1.0, 0.0)),
            Region(((2.0, 3.0), (0.0, 2.0)), (0.0, 1.0)),
            Region(((1.0, 3.0), (2.0, 3.0)), (1.0, 0.0)),
            Region(((0.0, 1.0), (1.0, 3.0)), (0.0, 1.0)),
        ],
        domain=((0.0, 3.0), (0.0, 3.0)),
    )


def test_pinwheel_has_no_clean_candidates():
    rs = pinwheel()
    assert find_candidate_splits(rs, rs.domain) == []


def test_regions_to_tree_pinwheel_fallback():
    rs = pinwheel()
    rng = np.random.default_rng(3)
    t = regions_to_tree(rs, rng)
    pts = rng.uniform(0.001, 2.999, size=(600, 2))
    member = rs.membership(pts)
    covered = member.sum(axis=1) == 1
    assert covered.any()
    preds = predict_batch(t, pts)
    region_labels = np.argmax(rs.distributions[np.argmax(member, axis=1)], axis=1)
    assert np.array_equal(preds[covered], region_labels[covered])


def sparse_set(rng, n: int) -> RegionSet:
    # box sides shrink with n so each region overlaps O(1) others
    side = 1.0 / np.sqrt(n)
    centers = rng.uniform(0, 1, size=(n, 2))
    lowers = centers - side
    uppers = centers + side
    dists = rng.uniform(0.1, 1.0, size=(n, 2))
    dists /= dists.sum(axis=1, keepdims=True)
    return RegionSet(k=2, lowers=lowers, uppers=uppers, distributions=dists)


def test_merge_beats_naive_on_sparse_sets():
    rng = np.random.default_rng(61)
    a = sparse_set(rng, 1024)
    b = sparse_set(rng, 1024)
    assert_same_regions(merge_regions(a, b), naive_merge(a, b))

    def median_time(fn, reps=3):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return sorted(times)[reps // 2]

    fast = median_time(lambda: merge_regions(a, b))
    slow = median_time(lambda: naive_merge(a, b))
    assert fast < slow


def test_json_roundtrip():
    rng = np.random.default_rng(71)
    for _ in range(10):
        rs = random_region_set(rng, int(rng.integers(1, 4)), int(rng.integers(1, 20)))
        again = region_set_from_json(region_set_to_json(rs))
        assert again.k == rs.k
        assert again.domain == rs.domain
        assert np.array_equal(again.lowers, rs.lowers)
        assert np.array_equal(again.uppers, rs.uppers)
        assert np.array_equal(again.distributions, rs.distributions)


def test_json_roundtrip_with_domain():
    rs = RegionSet.from_regions([Region(((0.0, 1.0),), (1.0,))], domain=((-INF, 4.0),)
    )
    again = region_set_from_json(region_set_to_json(rs))
    assert again.domain == ((-INF, 4.0),)


def test_json_rejects_malformed():
    cases = [
        "nope",
        "[]",
        '{"k": 1}',
        '{"k": true, "regions": []}',
        '{"k": 1, "regions": [{"bounds": [[0, 1]]}]}',
        '{"k": 2, "regions": [{"bounds": [[0, 1]], "distribution": [1.0]}]}',
        '{"k": 1, "regions": [{"bounds": [["low", 1]], "distribution": [1.0]}]}',
        '{"k": 1, "regions": [{"bounds": [[1, 0]], "distribution": [1.0]}]}',
        '{"k": 1, "domain": [[0, 1], [0, 1]], "regions": []}',
    ]
    for text in cases:
        with pytest.raises(ParseError):
            region_set_from_json(text)
