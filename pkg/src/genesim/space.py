"""Decision-space geometry: trees as box partitions, and back.

A decision tree partitions feature space into axis-aligned boxes, one
per reachable leaf. Two partitions are overlaid by intersecting their
boxes pairwise and averaging the leaf distributions of each surviving
pair. The overlay is folded back into a single tree by recursively
cutting space along facet coordinates that slice through no box.

Boxes use half-open intervals (lower, upper]: a point lies in a box when
lower < x_d <= upper for every dimension d, matching the tree convention
that row[feature] <= threshold routes left. Bounds of -inf/+inf are
ordinary values; thresholds are copied around exactly, never perturbed,
so facet coordinates that should coincide compare equal.

Pair candidates for the overlay are found with a sweep line: pairs whose
projections overlap are counted per dimension in O(n log n), enumerated
in the sparsest dimension, and filtered through the remaining dimensions,
instead of testing all n^2 pairs in every dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .tree import DecisionTree, Leaf, Node, Split

DISTRIBUTION_TOLERANCE = 1e-9

INF = float("inf")


@dataclass(frozen=True)
class Region:
    """One axis-aligned box with a class distribution.

    bounds[d] is the (lower, upper] interval in dimension d; every
    interval must have a non-empty interior.
    """

    bounds: tuple[tuple[float, float], ...]
    distribution: tuple[float, ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(up)) for lo, up in self.bounds)
        dist = tuple(float(x) for x in self.distribution)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "distribution", dist)
        if not bounds:
            raise ValidationError("a region needs at least one dimension")
        for d, (lo, up) in enumerate(bounds):
            if not lo < up:
                raise ValidationError(
                    f"region interval ({lo}, {up}] in dimension {d} has empty interior"
                )
        if not dist:
            raise ValidationError("region distribution is empty")
        if any(x < 0.0 for x in dist):
            raise ValidationError("region distribution has a negative entry")
        total = sum(dist)
        if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValidationError(f"region distribution sums to {total!r}, not 1")


def _full_domain(k: int) -> tuple[tuple[float, float], ...]:
    return tuple((-INF, INF) for _ in range(k))


@dataclass(frozen=True, eq=False)
class RegionSet:
    """A collection of regions stored as parallel arrays.

    lowers and uppers are (n, k); distributions is (n, C). domain is the
    enclosing box (defaults to all of R^k). Arrays are frozen read-only.
    """

    k: int
    lowers: np.ndarray
    uppers: np.ndarray
    distributions: np.ndarray
    domain: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        lowers = np.array(self.lowers, dtype=np.float64).reshape(-1, self.k)
        uppers = np.array(self.uppers, dtype=np.float64).reshape(-1, self.k)
        dists = np.array(self.distributions, dtype=np.float64)
        if dists.ndim == 1:
            dists = dists.reshape(len(lowers), -1)
        object.__setattr__(self, "lowers", lowers)
        object.__setattr__(self, "uppers", uppers)
        object.__setattr__(self, "distributions", dists)
        if self.k < 1:
            raise ValidationError(f"k must be at least 1, got {self.k}")
        if uppers.shape != lowers.shape or dists.shape[0] != lowers.shape[0]:
            raise ValidationError("region arrays disagree on shape")
        if not (lowers < uppers).all():
            raise ValidationError("a region interval has empty interior")
        if dists.size:
            if (dists < 0.0).any():
                raise ValidationError("a region distribution has a negative entry")
            sums = dists.sum(axis=1)
            if np.abs(sums - 1.0).max(initial=0.0) > DISTRIBUTION_TOLERANCE:
                raise ValidationError("a region distribution does not sum to 1")
        domain = self.domain if self.domain is not None else _full_domain(self.k)
        domain = tuple((float(lo), float(up)) for lo, up in domain)
        if len(domain) != self.k:
            raise ValidationError("domain dimensionality does not match k")
        object.__setattr__(self, "domain", domain)
        lowers.setflags(write=False)
        uppers.setflags(write=False)
        dists.setflags(write=False)

    @classmethod
    def from_regions(cls, regions, k: int | None = None, domain=None) -> "RegionSet":
        regions = list(regions)
        if k is None:
            if not regions:
                raise ValidationError("k is required for an empty region list")
            k = len(regions[0].bounds)
        for r in regions:
            if len(r.bounds) != k:
                raise ValidationError("regions disagree on dimensionality")
        n_classes = len(regions[0].distribution) if regions else 0
        lowers = np.array([[b[0] for b in r.bounds] for r in regions]).reshape(-1, k)
        uppers = np.array([[b[1] for b in r.bounds] for r in regions]).reshape(-1, k)
        dists = np.array([r.distribution for r in regions]).reshape(-1, n_classes)
        return cls(k=k, lowers=lowers, uppers=uppers, distributions=dists, domain=domain)

    @property
    def n_regions(self) -> int:
        return self.lowers.shape[0]

    @property
    def regions(self) -> tuple[Region, ...]:
        return tuple(
            Region(
                tuple(zip(self.lowers[i].tolist(), self.uppers[i].tolist())),
                tuple(self.distributions[i].tolist()),
            )
            for i in range(self.n_regions)
        )

    def canonical(self) -> "RegionSet":
        """Regions sorted lexicographically by bounds, then distribution."""
        if self.n_regions == 0:
            return self
        keys = []
        for c in range(self.distributions.shape[1] - 1, -1, -1):
            keys.append(self.distributions[:, c])
        for d in range(self.k - 1, -1, -1):
            keys.append(self.uppers[:, d])
            keys.append(self.lowers[:, d])
        order = np.lexsort(keys)
        return RegionSet(
            k=self.k,
            lowers=self.lowers[order],
            uppers=self.uppers[order],
            distributions=self.distributions[order],
            domain=self.domain,
        )

    def membership(self, points) -> np.ndarray:
        """Boolean matrix (n_points, n_regions): which region holds which point."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, self.k)
        inside = (self.lowers[None, :, :] < pts[:, None, :]) & (
            pts[:, None, :] <= self.uppers[None, :, :]
        )
        return inside.all(axis=2)


def tree_to_regions(tree: DecisionTree, k: int) -> RegionSet:
    """Enumerate the leaf boxes of a tree over R^k.

    Each root-to-leaf path intersects its threshold constraints into one
    box. Leaves made unreachable by contradictory thresholds along the
    path (possible after random mutations) get an empty box and are
    dropped; the remaining boxes still partition R^k.
    """
    if k < 1 or k <= tree.max_feature:
        raise ValidationError(
            f"k={k} cannot host feature index {tree.max_feature}"
        )
    lowers: list[np.ndarray] = []
    uppers: list[np.ndarray] = []
    dists: list[tuple[float, ...]] = []
    stack: list[tuple[Node, np.ndarray, np.ndarray]] = [
        (tree.root, np.full(k, -INF), np.full(k, INF))
    ]
    while stack:
        node, lo, up = stack.pop()
        if isinstance(node, Leaf):
            if (lo < up).all():
                lowers.append(lo)
                uppers.append(up)
                dists.append(node.distribution)
            continue
        left_up = up.copy()
        left_up[node.feature] = min(left_up[node.feature], node.threshold)
        right_lo = lo.copy()
        right_lo[node.feature] = max(right_lo[node.feature], node.threshold)
        stack.append((node.right, right_lo, up))
        stack.append((node.left, lo, left_up))
    n_classes = tree.n_classes
    return RegionSet(
        k=k,
        lowers=np.array(lowers).reshape(-1, k),
        uppers=np.array(uppers).reshape(-1, k),
        distributions=np.array(dists).reshape(-1, n_classes),
    )


def _overlap_count(alo, aup, blo, bup) -> int:
    """Number of (a, b) interval pairs with a non-empty open overlap.

    Intervals are half-open (lo, up], so pairs touching at a point do not
    overlap. Counted in O(n log n) via sorted endpoints.
    """
    blo_sorted = np.sort(blo)
    bup_sorted = np.sort(bup)
    lt_up = np.searchsorted(blo_sorted, aup, side="left")
    le_lo = np.searchsorted(bup_sorted, alo, side="right")
    return int((lt_up - le_lo).sum())


def _sweep_pairs(alo, aup, blo, bup) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate overlapping (a, b) interval pairs with a sweep line.

    Events are sorted by coordinate with ends processed before starts, so
    intervals that merely touch are never simultaneously active. Active
    sets are dicts (cheap removal, C-speed iteration) and every start
    emits its pairs in one extend.
    """
    na, nb = len(alo), len(blo)
    coords = np.concatenate([alo, aup, blo, bup])
    # start=1 / end=0; lexsort keeps ends ahead of starts at equal coords
    kinds = np.repeat(np.array([1, 0, 1, 0]), [na, na, nb, nb])
    sides = np.repeat(np.array([0, 0, 1, 1]), [na, na, nb, nb])
    idxs = np.concatenate(
        [np.arange(na), np.arange(na), np.arange(nb), np.arange(nb)]
    )
    order = np.lexsort((kinds, coords))
    ev_kind = kinds[order].tolist()
    ev_side = sides[order].tolist()
    ev_idx = idxs[order].tolist()
    active_a: dict[int, None] = {}
    active_b: dict[int, None] = {}
    out_i: list[int] = []
    out_j: list[int] = []
    for kind, side, idx in zip(ev_kind, ev_side, ev_idx):
        if kind == 0:
            (active_a if side == 0 else active_b).pop(idx, None)
        elif side == 0:
            if active_b:
                out_i.extend([idx] * len(active_b))
                out_j.extend(active_b)
            active_a[idx] = None
        else:
            if active_a:
                out_i.extend(active_a)
                out_j.extend([idx] * len(active_a))
            active_b[idx] = None
    return np.array(out_i, dtype=np.int64), np.array(out_j, dtype=np.int64)


def _intersect_domains(a, b, k):
    return tuple((max(a[d][0], b[d][0]), min(a[d][1], b[d][1])) for d in range(k))


# candidate pairs are filtered in blocks of this many; bounds the transient
# (pairs, k) allocations when two large region sets overlap heavily
_COMBINE_CHUNK = 131_072


def _combine(a: RegionSet, b: RegionSet, I: np.ndarray, J: np.ndarray) -> RegionSet:
    """Intersect the candidate pairs (I[t], J[t]) and keep non-empty boxes.

    Shared by the sweep and the exhaustive merge so both produce
    bit-identical floats: intersection bounds are elementwise max/min and
    the output distribution is the plain mean of the two parents. Pairs
    are processed chunk by chunk; per-row arithmetic and row order do not
    depend on the chunk boundaries, so the result is the same as one pass.
    """
    n_classes = max(a.distributions.shape[1], b.distributions.shape[1])
    if I.size:
        lo_parts, up_parts, di_parts = [], [], []
        for s in range(0, I.size, _COMBINE_CHUNK):
            Ic = I[s : s + _COMBINE_CHUNK]
            Jc = J[s : s + _COMBINE_CHUNK]
            lows = np.maximum(a.lowers[Ic], b.lowers[Jc])
            ups = np.minimum(a.uppers[Ic], b.uppers[Jc])
            keep = (lows < ups).all(axis=1)
            lo_parts.append(lows[keep])
            up_parts.append(ups[keep])
            di_parts.append(
                (a.distributions[Ic[keep]] + b.distributions[Jc[keep]]) / 2.0
            )
        if len(lo_parts) == 1:
            lows, ups, dists = lo_parts[0], up_parts[0], di_parts[0]
        else:
            lows = np.concatenate(lo_parts)
            ups = np.concatenate(up_parts)
            dists = np.concatenate(di_parts)
    else:
        lows = np.empty((0, a.k))
        ups = np.empty((0, a.k))
        dists = np.empty((0, n_classes))
    return RegionSet(
        k=a.k,
        lowers=lows,
        uppers=ups,
        distributions=dists,
        domain=_intersect_domains(a.domain, b.domain, a.k),
    ).canonical()


def _check_mergeable(a: RegionSet, b: RegionSet) -> None:
    if a.k != b.k:
        raise ValidationError(f"cannot merge region sets with k={a.k} and k={b.k}")
    if (
        a.n_regions
        and b.n_regions
        and a.distributions.shape[1] != b.distributions.shape[1]
    ):
        raise ValidationError("region sets disagree on the number of classes")


def merge_regions(a: RegionSet, b: RegionSet) -> RegionSet:
    """Overlay two region sets: all pairwise intersections with interior.

    Candidate pairs are found by sweeping the dimension whose projected
    intervals overlap least (counted exactly per dimension first), then
    filtered through the other dimensions, so work is near-linear when
    few pairs survive. Output distributions are the unweighted mean of
    the two parents; regions come back in canonical order.
    """
    _check_mergeable(a, b)
    if a.n_regions == 0 or b.n_regions == 0:
        return _combine(a, b, np.empty(0, np.int64), np.empty(0, np.int64))
    counts = [
        _overlap_count(a.lowers[:, d], a.uppers[:, d], b.lowers[:, d], b.uppers[:, d])
        for d in range(a.k)
    ]
    d_star = int(np.argmin(counts))
    I, J = _sweep_pairs(
        a.lowers[:, d_star], a.uppers[:, d_star], b.lowers[:, d_star], b.uppers[:, d_star]
    )
    return _combine(a, b, I, J)


def naive_merge(a: RegionSet, b: RegionSet) -> RegionSet:
    """Reference overlay: test every pair of regions. Quadratic on purpose."""
    _check_mergeable(a, b)
    I = np.repeat(np.arange(a.n_regions, dtype=np.int64), b.n_regions)
    J = np.tile(np.arange(b.n_regions, dtype=np.int64), a.n_regions)
    return _combine(a, b, I, J)


def _inside_values(lowers, uppers, blo, bup, d) -> np.ndarray:
    """Finite facet coordinates of dimension d strictly inside the box."""
    vals = np.unique(np.concatenate([lowers[:, d], uppers[:, d]]))
    return vals[np.isfinite(vals) & (vals > blo[d]) & (vals < bup[d])]


def _clean_candidates(lowers, uppers, blo, bup) -> list[tuple[int, float]]:
    """All (dimension, value) cuts that slice through no region interior.

    Sorted by (dimension, value), values unique within a dimension. One
    broadcast over all dimensions at once while the (2n, n, k) temporary
    beats sorting; per-dimension searchsorted counting for larger sets
    (the crossover sits near 50 regions independent of k, since both the
    cube and the per-dimension loop scale linearly in k).
    """
    n, k = lowers.shape
    vals = np.concatenate([lowers, uppers], axis=0)
    # strict comparison against the box drops +-inf facets on its own
    inside = (vals > blo) & (vals < bup)
    if n <= 48:
        cut = (
            (lowers[None, :, :] < vals[:, None, :]) & (vals[:, None, :] < uppers[None, :, :])
        ).any(axis=1)
        rows, dims = np.nonzero(inside & ~cut)
        if rows.size == 0:
            return []
        vv = vals[rows, dims]
        order = np.lexsort((vv, dims))
        dims = dims[order]
        vv = vv[order]
        dup = np.zeros(vv.size, dtype=bool)
        dup[1:] = (dims[1:] == dims[:-1]) & (vv[1:] == vv[:-1])
        return [(int(d), float(v)) for d, v in zip(dims[~dup], vv[~dup])]

    out: list[tuple[int, float]] = []
    for d in range(k):
        vd = np.unique(vals[inside[:, d], d])
        if vd.size == 0:
            continue
        # clean <=> nobody straddles v: #{lo < v} == #{up <= v} (lo < up always)
        n_lo = np.searchsorted(np.sort(lowers[:, d]), vd, side="left")
        n_up = np.searchsorted(np.sort(uppers[:, d]), vd, side="right")
        out.extend((d, float(v)) for v in vd[n_lo == n_up])
    return out


def find_candidate_splits(rs: RegionSet, box) -> list[tuple[int, float]]:
    """Cut planes that respect every region of rs clipped to box.

    A candidate is a finite facet coordinate v of some clipped region,
    strictly inside box's interval in its dimension, such that the plane
    x_d = v cuts the interior of no clipped region, i.e. the facet spans
    the full box cross-section. Sorted by (dimension, value).
    """
    box = tuple((float(lo), float(up)) for lo, up in box)
    if len(box) != rs.k:
        raise ValidationError(f"box has {len(box)} dimensions, expected {rs.k}")
    blo = np.array([b[0] for b in box])
    bup = np.array([b[1] for b in box])
    overlap = ((rs.lowers < bup) & (blo < rs.uppers)).all(axis=1)
    if not overlap.any():
        return []
    lowers = np.maximum(rs.lowers[overlap], blo)
    uppers = np.minimum(rs.uppers[overlap], bup)
    return _clean_candidates(lowers, uppers, blo, bup)


def _fewest_cut_split(lowers, uppers, blo, bup) -> tuple[int, float] | None:
    """Fallback cut: the facet coordinate slicing the fewest interiors.

    Only cuts that leave at least one region on each side qualify. Ties
    prefer the lowest dimension, then the lowest value.
    """
    best: tuple[int, int, float] | None = None
    for d in range(len(blo)):
        vals = _inside_values(lowers, uppers, blo, bup, d)
        if vals.size == 0:
            continue
        lo_d = lowers[None, :, d]
        up_d = uppers[None, :, d]
        v = vals[:, None]
        cut_counts = ((lo_d < v) & (v < up_d)).sum(axis=1)
        left_counts = (up_d <= v).sum(axis=1) + cut_counts
        right_counts = (lo_d >= v).sum(axis=1) + cut_counts
        ok = (left_counts >= 1) & (right_counts >= 1)
        if not ok.any():
            continue
        masked = np.where(ok, cut_counts, np.iinfo(np.int64).max)
        j = int(np.argmin(masked))  # first minimum: lowest value wins ties
        if best is None or masked[j] < best[0]:
            best = (int(masked[j]), d, float(vals[j]))
    if best is None:
        return None
    return best[1], best[2]


def _mean_leaf(dists: np.ndarray) -> Leaf:
    return Leaf(tuple(dists.mean(axis=0)))


def _build_node(lowers, uppers, dists, blo, bup, rng) -> Node:
    n = lowers.shape[0]
    if n == 1:
        return Leaf(tuple(dists[0]))
    labels = np.argmax(dists, axis=1)
    if (labels == labels[0]).all():
        return _mean_leaf(dists)

    candidates = _clean_candidates(lowers, uppers, blo, bup)
    if candidates:
        d, v = candidates[int(rng.integers(len(candidates)))]
        left = uppers[:, d] <= v
        if left.all() or not left.any():
            # everything fell on one side: possible only for non-covering
            # sets; retry against the cuts that actually separate something
            usable = [
                (dd, vv)
                for dd, vv in candidates
                if 0 < int((uppers[:, dd] <= vv).sum()) < n
            ]
            if usable:
                d, v = usable[int(rng.integers(len(usable)))]
                left = uppers[:, d] <= v
            else:
                left = None
        if left is not None:
            left_up = bup.copy()
            left_up[d] = v
            right_lo = blo.copy()
            right_lo[d] = v
            return Split(
                d,
                v,
                _build_node(lowers[left], uppers[left], dists[left], blo, left_up, rng),
                _build_node(lowers[~left], uppers[~left], dists[~left], right_lo, bup, rng),
            )

    choice = _fewest_cut_split(lowers, uppers, blo, bup)
    if choice is None:
        return _mean_leaf(dists)
    d, v = choice
    left_whole = uppers[:, d] <= v
    right_whole = lowers[:, d] >= v
    cut = ~(left_whole | right_whole)

    cut_left_up = uppers[cut].copy()
    cut_left_up[:, d] = v
    cut_right_lo = lowers[cut].copy()
    cut_right_lo[:, d] = v

    l_lowers = np.vstack([lowers[left_whole], lowers[cut]])
    l_uppers = np.vstack([uppers[left_whole], cut_left_up])
    l_dists = np.vstack([dists[left_whole], dists[cut]])
    r_lowers = np.vstack([lowers[right_whole], cut_right_lo])
    r_uppers = np.vstack([uppers[right_whole], uppers[cut]])
    r_dists = np.vstack([dists[right_whole], dists[cut]])

    left_up = bup.copy()
    left_up[d] = v
    right_lo = blo.copy()
    right_lo[d] = v
    return Split(
        d,
        v,
        _build_node(l_lowers, l_uppers, l_dists, blo, left_up, rng),
        _build_node(r_lowers, r_uppers, r_dists, right_lo, bup, rng),
    )


def regions_to_tree(rs: RegionSet, rng) -> DecisionTree:
    """Fold a region set back into a single decision tree.

    Recursively picks a cut uniformly at random among the planes that
    slice no region interior; when none exists, falls back to the facet
    coordinate cutting the fewest interiors and splits the cut regions
    into clipped copies. A box becomes a leaf once a single region
    remains, every region agrees on its argmax class, or no usable facet
    coordinate is left; the leaf distribution is the unweighted mean of
    the regions in the box.

    rng may be a numpy Generator or an int seed.
    """
    if rs.n_regions == 0:
        raise ValidationError("cannot rebuild a tree from an empty region set")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    blo = np.array([b[0] for b in rs.domain])
    bup = np.array([b[1] for b in rs.domain])
    root = _build_node(rs.lowers, rs.uppers, rs.distributions, blo, bup, gen)
    return DecisionTree(root)


def _bound_to_json(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _bound_from_json(x, what: str) -> float:
    if x == "inf":
        return INF
    if x == "-inf":
        return -INF
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{what} must be a number or 'inf'/'-inf', got {x!r}")
    return float(x)


def region_set_to_json(rs: RegionSet) -> str:
    """Dump a region set as JSON with 'inf'/'-inf' bound sentinels."""
    doc = {
        "k": rs.k,
        "domain": [[_bound_to_json(lo), _bound_to_json(up)] for lo, up in rs.domain],
        "regions": [
            {
                "bounds": [
                    [_bound_to_json(float(rs.lowers[i, d])), _bound_to_json(float(rs.uppers[i, d]))]
                    for d in range(rs.k)
                ],
                "distribution": rs.distributions[i].tolist(),
            }
            for i in range(rs.n_regions)
        ],
    }
    return json.dumps(doc, indent=2)


def region_set_from_json(text: str) -> RegionSet:
    """Parse the JSON dump produced by region_set_to_json."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid region set JSON: {exc}") from exc
    if not isinstance(doc, dict) or "k" not in doc or "regions" not in doc:
        raise ParseError("region set document needs 'k' and 'regions'")
    k = doc["k"]
    if isinstance(k, bool) or not isinstance(k, int):
        raise ParseError(f"k must be an integer, got {k!r}")
    domain = None
    if "domain" in doc:
        raw = doc["domain"]
        if not isinstance(raw, list) or len(raw) != k:
            raise ParseError("domain must list one interval per dimension")
        domain = tuple(
            (_bound_from_json(lo, "domain bound"), _bound_from_json(up, "domain bound"))
            for lo, up in raw
        )
    lowers, uppers, dists = [], [], []
    for entry in doc["regions"]:
        if not isinstance(entry, dict) or "bounds" not in entry or "distribution" not in entry:
            raise ParseError("each region needs 'bounds' and 'distribution'")
        bounds = entry["bounds"]
        if not isinstance(bounds, list) or len(bounds) != k:
            raise ParseError("region bounds must list one interval per dimension")
        lowers.append([_bound_from_json(b[0], "region bound") for b in bounds])
        uppers.append([_bound_from_json(b[1], "region bound") for b in bounds])
        dists.append([_bound_from_json(x, "distribution entry") for x in entry["distribution"]])
    n_classes = len(dists[0]) if dists else 0
    try:
        return RegionSet(
            k=k,
            lowers=np.array(lowers).reshape(-1, k),
            uppers=np.array(uppers).reshape(-1, k),
            distributions=np.array(dists).reshape(-1, n_classes),
            domain=domain,
        )
    except ValidationError as exc:
        raise ParseError(f"region set document violates structural rules: {exc}") from exc
