"""Regenerate the CSV fixtures under tests/data/.

scikit-learn is needed here only; the package itself does not depend on
it. The synthetic sets are deterministic given the seeds below, so
re-running this script reproduces the committed files byte for byte.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fmt(x: float) -> str:
    return repr(float(x))


def make_iris() -> None:
    bunch = load_iris()
    header = [
        "sepal_length",
        "sepal_width",
        "petal_length",
        "petal_width",
        "species",
    ]
    rows = [
        [fmt(v) for v in row] + [bunch.target_names[t]]
        for row, t in zip(bunch.data, bunch.target)
    ]
    write_csv(OUT / "iris.csv", header, rows)


def make_breast() -> None:
    """698 rows, nine integer severity scores from 1 to 10, two classes.

    457 benign rows cluster at the low end of every scale while 241
    malignant rows spread over the upper half, with per-feature mixing so
    the classes overlap instead of separating cleanly. Sixteen cells in
    one column are written as "?" to exercise the missing-value path.
    """
    rng = np.random.default_rng(698241)
    n_benign, n_malignant = 457, 241
    n = n_benign + n_malignant
    # every scale tracks one latent severity, so the columns are strongly
    # correlated and most of them are redundant given the strongest two
    severity = np.concatenate(
        [rng.beta(1.5, 30.0, size=n_benign), rng.beta(10.0, 3.0, size=n_malignant)]
    )
    quiet = rng.random(n_malignant) < 0.05
    severity[n_benign:][quiet] = rng.beta(1.5, 30.0, size=int(quiet.sum()))
    # name -> (weight on severity, offset)
    scales = {
        "clump_thickness": (0.70, 0.08),
        "size_uniformity": (0.90, 0.00),
        "shape_uniformity": (0.85, 0.01),
        "marginal_adhesion": (0.55, 0.02),
        "epithelial_size": (0.45, 0.08),
        "bare_nuclei": (0.95, 0.00),
        "bland_chromatin": (0.50, 0.08),
        "normal_nucleoli": (0.65, 0.01),
        "mitoses": (0.15, 0.00),
    }
    values = np.empty((n, len(scales)), dtype=np.int64)
    for j, (weight, offset) in enumerate(scales.values()):
        p = np.clip(weight * severity + offset + rng.normal(0.0, 0.02, size=n), 0.005, 0.95)
        values[:, j] = 1 + rng.binomial(9, p)
    labels = np.array(["benign"] * n_benign + ["malignant"] * n_malignant)
    order = rng.permutation(n)
    values = values[order]
    labels = labels[order]
    cells = [[str(v) for v in row] for row in values]
    nuclei_col = list(scales).index("bare_nuclei")
    for i in rng.choice(n, size=16, replace=False):
        cells[i][nuclei_col] = "?"
    header = list(scales) + ["diagnosis"]
    rows = [cells[i] + [labels[i]] for i in range(n)]
    write_csv(OUT / "breast.csv", header, rows)


def make_cars() -> None:
    """Six categorical columns, 1727 rows, four classes.

    The class is a deterministic function of the columns plus a small
    seeded flip, so trees have something to learn but the file is
    reproducible.
    """
    rng = np.random.default_rng(20240817)
    n = 1727
    columns = {
        "buying": ["vhigh", "high", "med", "low"],
        "maint": ["vhigh", "high", "med", "low"],
        "doors": ["2", "3", "4", "5more"],
        "persons": ["2", "4", "more"],
        "lug_boot": ["small", "med", "big"],
        "safety": ["low", "med", "high"],
    }
    names = list(columns)
    codes = {c: rng.integers(0, len(vals), size=n) for c, vals in columns.items()}
    score = (
        (3 - codes["buying"])
        + (3 - codes["maint"])
        + codes["persons"]
        + 2 * codes["safety"]
    )
    score = score + rng.integers(0, 2, size=n)
    classes = ["unacc", "acc", "good", "vgood"]
    label_idx = np.clip((score - 2) // 3, 0, 3)
    header = names + ["acceptability"]
    rows = [
        [columns[c][codes[c][i]] for c in names] + [classes[label_idx[i]]]
        for i in range(n)
    ]
    write_csv(OUT / "cars.csv", header, rows)


def make_two_class() -> None:
    """651 negatives, 349 positives over 8 continuous features.

    Built so the optimal rule is a soft threshold on two features; the
    class prior matches a 0.651 majority baseline.
    """
    rng = np.random.default_rng(19650349)
    n_neg, n_pos = 651, 349
    k = 8
    neg = rng.normal(0.0, 1.0, size=(n_neg, k))
    pos = rng.normal(0.0, 1.0, size=(n_pos, k))
    pos[:, 0] += 1.6
    pos[:, 1] += 1.1
    rows_arr = np.vstack([neg, pos])
    labels = np.array([0] * n_neg + [1] * n_pos)
    order = rng.permutation(n_neg + n_pos)
    rows_arr = rows_arr[order]
    labels = labels[order]
    header = [f"x{i}" for i in range(k)] + ["outcome"]
    rows = [
        [fmt(v) for v in row] + [("neg", "pos")[t]]
        for row, t in zip(rows_arr, labels)
    ]
    write_csv(OUT / "twoclass.csv", header, rows)


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    make_iris()
    make_breast()
    make_cars()
    make_two_class()


if __name__ == "__main__":
    main()
