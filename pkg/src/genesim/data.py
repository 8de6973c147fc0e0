"""Dataset loading, column typing, and resampling plans.

CSV files must be UTF-8 with a header row and comma separators. Empty
cells and "?" count as missing and are imputed at load time (column
median for continuous features, column mode for discrete ones), so a
loaded Dataset never contains missing values.

Column typing is automatic unless overridden: a column whose observed
cells all parse as numbers and carry more than AUTO_TYPE_DISTINCT_THRESHOLD
distinct values becomes continuous; every other column becomes discrete
and is ordinal-encoded in first-appearance order of its raw cell strings.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, ValidationError
from .seeding import derive_seed

CONTINUOUS = "continuous"
DISCRETE = "discrete"
FEATURE_KINDS = (CONTINUOUS, DISCRETE)

# Numeric columns with more distinct values than this are typed continuous.
AUTO_TYPE_DISTINCT_THRESHOLD = 10

MISSING_TOKENS = ("", "?")


@dataclass(frozen=True)
class FeatureSpec:
    """Metadata for one feature column of a loaded dataset.

    observed_range is the (min, max) of the encoded column over the data
    actually loaded. For discrete features the encoded values are the
    integers 0..category_count-1 and `categories` keeps the original cell
    strings, in encoding order, so codes can be mapped back.
    """

    name: str
    kind: str
    observed_range: tuple[float, float]
    category_count: int | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        lo, hi = self.observed_range
        if lo > hi:
            raise ValidationError(
                f"feature {self.name!r}: observed range ({lo}, {hi}) is inverted"
            )
        if self.kind == DISCRETE:
            if self.category_count is None or self.category_count < 2:
                raise ValidationError(
                    f"feature {self.name!r}: discrete features need at least 2 categories"
                )
            if self.categories is None or len(self.categories) != self.category_count:
                raise ValidationError(
                    f"feature {self.name!r}: categories do not match category_count"
                )

    def decode(self, value: float) -> str:
        """Map an encoded discrete value back to its original cell string."""
        if self.kind != DISCRETE:
            raise ValidationError(f"feature {self.name!r} is not discrete")
        code = int(value)
        if code != value or not 0 <= code < self.category_count:
            raise ValidationError(f"feature {self.name!r}: {value} is not a valid code")
        return self.categories[code]


@dataclass(frozen=True, eq=False)
class Dataset:
    """A fully numeric design matrix plus per-column metadata.

    rows is (n_samples, n_features) float64, labels is (n_samples,) int64
    indexing into class_names. Arrays are frozen read-only.
    """

    features: tuple[FeatureSpec, ...]
    rows: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)
        if rows.ndim != 2:
            raise ValidationError("rows must be a 2-d array")
        if rows.shape[0] != labels.shape[0]:
            raise ValidationError("rows and labels disagree on sample count")
        if rows.shape[0] == 0:
            raise ValidationError("dataset has no samples")
        if rows.shape[1] != len(self.features):
            raise ValidationError("row width does not match the feature specs")
        if np.isnan(rows).any():
            raise ValidationError("dataset contains missing values after load")
        if len(self.class_names) < 2:
            raise ValidationError("a dataset needs at least 2 classes")
        if labels.min() < 0 or labels.max() >= len(self.class_names):
            raise ValidationError("label index out of range")
        counts = np.bincount(labels, minlength=len(self.class_names))
        if (counts == 0).any():
            empty = self.class_names[int(np.argmin(counts))]
            raise ValidationError(f"class {empty!r} has no samples")
        rows.setflags(write=False)
        labels.setflags(write=False)

    @property
    def n_samples(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Stratified fold assignments for repeated cross-validation.

    assignments is (n_repeats, n_samples); entry [r, i] is the fold that
    sample i belongs to in repeat r.
    """

    n_folds: int
    n_repeats: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.array(self.assignments, dtype=np.int64)
        object.__setattr__(self, "assignments", arr)
        if arr.shape[0] != self.n_repeats:
            raise ValidationError("assignment rows do not match n_repeats")
        if arr.size and (arr.min() < 0 or arr.max() >= self.n_folds):
            raise ValidationError("fold index out of range")
        arr.setflags(write=False)

    def test_indices(self, repeat: int, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments[repeat] == fold)[0]

    def train_indices(self, repeat: int, fold: int) -> np.ndarray:
        return np.nonzero(self.assignments[repeat] != fold)[0]


def _read_csv(path: Path) -> tuple[list[str], list[list[str]], list[int]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open dataset file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        except csv.Error as exc:
            raise ParseError(f"{path}: line {reader.line_num}: {exc}") from exc
        header = [h.strip() for h in header]
        width = len(header)
        rows: list[list[str]] = []
        line_nums: list[int] = []
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != width:
                    raise ParseError(
                        f"{path}: line {reader.line_num}: expected {width} fields, "
                        f"got {len(row)}"
                    )
                rows.append([c.strip() for c in row])
                line_nums.append(reader.line_num)
        except csv.Error as exc:
            raise ParseError(f"{path}: line {reader.line_num}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, rows, line_nums


def _build_feature(
    name: str,
    raw: list[str],
    override: str | None,
    path: Path,
    line_nums: list[int],
) -> tuple[np.ndarray, FeatureSpec]:
    missing = [cell in MISSING_TOKENS for cell in raw]
    present = [cell for cell, m in zip(raw, missing) if not m]
    if not present:
        raise ValidationError(f"{path}: column {name!r} has no observed values")

    parsed: list[float] | None = []
    bad_line = None
    for cell, m, ln in zip(raw, missing, line_nums):
        if m:
            continue
        try:
            parsed.append(float(cell))
        except ValueError:
            parsed = None
            bad_line = (ln, cell)
            break

    if override is None:
        numeric_distinct = len(set(parsed)) if parsed is not None else 0
        kind = CONTINUOUS if numeric_distinct > AUTO_TYPE_DISTINCT_THRESHOLD else DISCRETE
    else:
        kind = override

    if kind == CONTINUOUS:
        if parsed is None:
            ln, cell = bad_line
            raise ParseError(
                f"{path}: line {ln}: column {name!r} value {cell!r} is not numeric"
            )
        observed = np.array(parsed, dtype=np.float64)
        fill = float(np.median(observed))
        col = np.empty(len(raw), dtype=np.float64)
        j = 0
        for i, m in enumerate(missing):
            if m:
                col[i] = fill
            else:
                col[i] = observed[j]
                j += 1
        spec = FeatureSpec(name, CONTINUOUS, (float(col.min()), float(col.max())))
        return col, spec

    categories: list[str] = []
    codes: dict[str, int] = {}
    for cell in present:
        if cell not in codes:
            codes[cell] = len(categories)
            categories.append(cell)
    if len(categories) < 2:
        raise ValidationError(
            f"{path}: column {name!r} has a single category; "
            "discrete features need at least 2"
        )
    encoded = np.array([codes[cell] for cell in present], dtype=np.int64)
    # bincount argmax keeps the earliest category on count ties
    mode = int(np.argmax(np.bincount(encoded, minlength=len(categories))))
    col = np.empty(len(raw), dtype=np.float64)
    j = 0
    for i, m in enumerate(missing):
        if m:
            col[i] = mode
        else:
            col[i] = encoded[j]
            j += 1
    spec = FeatureSpec(
        name,
        DISCRETE,
        (float(col.min()), float(col.max())),
        category_count=len(categories),
        categories=tuple(categories),
    )
    return col, spec


def load_csv(
    path,
    label_column: str,
    feature_kinds: dict[str, str] | None = None,
) -> Dataset:
    """Load a CSV file into a typed, imputed Dataset.

    feature_kinds optionally forces the kind of named columns
    ("continuous" or "discrete") instead of the automatic rule. Labels are
    mapped to integers in first-appearance order.
    """
    p = Path(path)
    header, rows, line_nums = _read_csv(p)

    if label_column not in header:
        raise ConfigError(
            f"{p}: label column {label_column!r} not found; columns are {header}"
        )
    label_idx = header.index(label_column)

    feature_kinds = dict(feature_kinds or {})
    unknown = set(feature_kinds) - set(header)
    if unknown:
        raise ConfigError(f"{p}: kind overrides for unknown columns {sorted(unknown)}")
    if label_column in feature_kinds:
        raise ConfigError(f"{p}: cannot override the kind of the label column")
    for col, kind in feature_kinds.items():
        if kind not in FEATURE_KINDS:
            raise ConfigError(
                f"{p}: column {col!r}: kind must be one of {FEATURE_KINDS}, got {kind!r}"
            )

    class_names: list[str] = []
    class_codes: dict[str, int] = {}
    labels = np.empty(len(rows), dtype=np.int64)
    for i, (row, ln) in enumerate(zip(rows, line_nums)):
        cell = row[label_idx]
        if cell in MISSING_TOKENS:
            raise ValidationError(f"{p}: line {ln}: missing label")
        if cell not in class_codes:
            class_codes[cell] = len(class_names)
            class_names.append(cell)
        labels[i] = class_codes[cell]

    cols: list[np.ndarray] = []
    specs: list[FeatureSpec] = []
    for j, name in enumerate(header):
        if j == label_idx:
            continue
        raw = [row[j] for row in rows]
        col, spec = _build_feature(name, raw, feature_kinds.get(name), p, line_nums)
        cols.append(col)
        specs.append(spec)
    if not cols:
        raise ValidationError(f"{p}: no feature columns besides the label")

    return Dataset(
        features=tuple(specs),
        rows=np.column_stack(cols),
        labels=labels,
        class_names=tuple(class_names),
    )


def read_manifest(path) -> tuple[str | None, dict[str, str]]:
    """Read an optional dataset manifest.

    The manifest is a JSON object mapping column names to
    {"kind": "continuous"|"discrete", "label_column": bool}; both keys are
    optional per column. Returns (label_column_or_None, kind_overrides).
    """
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot open manifest {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{p}: manifest must be a JSON object")
    label = None
    kinds: dict[str, str] = {}
    for col, entry in doc.items():
        if not isinstance(entry, dict):
            raise ParseError(f"{p}: entry for column {col!r} must be an object")
        if entry.get("label_column"):
            if label is not None:
                raise ConfigError(f"{p}: more than one label column flagged")
            label = col
        kind = entry.get("kind")
        if kind is not None:
            if kind not in FEATURE_KINDS:
                raise ConfigError(
                    f"{p}: column {col!r}: kind must be one of {FEATURE_KINDS}"
                )
            kinds[col] = kind
    return label, kinds


def make_folds(dataset: Dataset, n_folds: int, n_repeats: int, seed: int) -> FoldPlan:
    """Build stratified fold assignments for repeated cross-validation.

    Within each repeat, samples are grouped by class, shuffled, and dealt
    round-robin with a running counter across classes, so per-class fold
    counts differ by at most one and total fold sizes stay balanced.
    """
    if n_folds < 2:
        raise ValidationError(f"n_folds must be at least 2, got {n_folds}")
    if n_repeats < 1:
        raise ValidationError(f"n_repeats must be at least 1, got {n_repeats}")
    counts = dataset.class_counts()
    for c, cnt in enumerate(counts):
        if cnt < n_folds:
            raise ValidationError(
                f"class {dataset.class_names[c]!r} has {int(cnt)} samples, "
                f"fewer than {n_folds} folds"
            )
    n = dataset.n_samples
    assignments = np.empty((n_repeats, n), dtype=np.int64)
    for r in range(n_repeats):
        rng = np.random.default_rng(derive_seed(seed, "fold-repeat", r))
        t = 0
        for c in range(dataset.n_classes):
            members = rng.permutation(np.nonzero(dataset.labels == c)[0])
            for i in members:
                assignments[r, i] = t % n_folds
                t += 1
    return FoldPlan(n_folds=n_folds, n_repeats=n_repeats, assignments=assignments, seed=seed)


def split_half(dataset: Dataset, indices, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Split the given sample indices into two stratified halves.

    Returns (grow, validation) as sorted disjoint index arrays covering
    the input. The same running-counter deal as make_folds keeps each
    class split half and half.
    """
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or idx.size < 2:
        raise ValidationError("need at least 2 samples to split in half")
    rng = np.random.default_rng(derive_seed(seed, "half-split"))
    labels = dataset.labels[idx]
    grow: list[int] = []
    val: list[int] = []
    t = 0
    for c in range(dataset.n_classes):
        members = rng.permutation(idx[labels == c])
        for m in members:
            (grow if t % 2 == 0 else val).append(int(m))
            t += 1
    return np.array(sorted(grow), dtype=np.int64), np.array(sorted(val), dtype=np.int64)
