"""Datasets: CSV ingestion, the two-arm spiral, z-scoring and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .numerics import Rng


class DataError(ValueError):
    """Raised for unreadable or inconsistent input data."""


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64 in 0..C-1
    class_count: int
    class_names: tuple | None = field(default=None)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise DataError(f"features must be a non-empty 2-D array, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("one label per sample required")
        if self.class_count < 2:
            raise DataError(f"need at least 2 classes, got {self.class_count}")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise DataError("labels out of range 0..C-1")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite values")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx], self.class_count, self.class_names)


def one_hot(y, C):
    if not 0 <= y < C:
        raise ValueError(f"label {y} out of range for {C} classes")
    e = np.zeros(C)
    e[y] = 1.0
    return e


# ---------------------------------------------------------------- spiral


def generate_spiral(n_train=1000, n_test=500, noise_sigma=0.05, rotations=2.0, seed=0, inner_radius=0.0):
    """Two interleaved Archimedean spirals in the plane, classes 0 and 1.

    Samples come in pairs sharing one angle theta ~ U[0, 2*pi*rotations). The
    radius is ``inner_radius + (1 - inner_radius) * theta / (2*pi*rotations)``
    and class c sits at r*(cos(theta + c*pi), sin(theta + c*pi)), so the two
    members of a pair mirror each other through the origin before isotropic
    Gaussian noise is added. Rows alternate class 0, class 1. Train and test
    use separate substreams of ``seed``.
    """
    for name, count in (("n_train", n_train), ("n_test", n_test)):
        if count < 2 or count % 2:
            raise ValueError(f"{name} must be an even number >= 2, got {count}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if rotations <= 0:
        raise ValueError(f"rotations must be > 0, got {rotations}")
    if not 0.0 <= inner_radius < 1.0:
        raise ValueError(f"inner_radius must be in [0, 1), got {inner_radius}")
    root = Rng(seed)
    args = (noise_sigma, rotations, inner_radius)
    return (
        _spiral_split(n_train, *args, root.substream("spiral/train")),
        _spiral_split(n_test, *args, root.substream("spiral/test")),
    )


def _spiral_split(n, sigma, rotations, inner, rng):
    span = 2.0 * math.pi * rotations
    xs = np.empty((n, 2))
    ys = np.tile(np.array([0, 1], dtype=np.int64), n // 2)
    for k in range(n // 2):
        theta = rng.uniform(0.0, span)
        r = inner + (1.0 - inner) * theta / span
        for c in (0, 1):
            i = 2 * k + c
            xs[i, 0] = r * math.cos(theta + c * math.pi) + rng.gaussian(0.0, sigma)
            xs[i, 1] = r * math.sin(theta + c * math.pi) + rng.gaussian(0.0, sigma)
    return Dataset(xs, ys, 2, ("0", "1"))


# ---------------------------------------------------------------- CSV


def _parse_float(cell, lineno, col):
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric feature {cell!r} in column {col}") from None
    if not math.isfinite(v):
        raise DataError(f"line {lineno}: non-finite feature {cell!r} in column {col}")
    return v


def _is_int(s):
    try:
        int(s)
    except ValueError:
        return False
    return True


def _looks_like_header(row, label_col):
    for j, cell in enumerate(row):
        if j == label_col:
            continue
        try:
            float(cell)
        except ValueError:
            return True
    return False


def load_csv(path, has_header="auto", label_column=-1, delimiter=",", classes=None):
    """Read a numeric feature table with one label column.

    Integer labels map to 0..C-1 in numeric order; any other labels map in
    sorted string order. Pass ``classes`` (the ``class_names`` of another
    dataset) to reuse an existing mapping, e.g. for a test split.
    ``has_header`` is True, False or "auto" (header if a feature cell of the
    first row is not a number).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    rows = [(i + 1, r) for i, r in enumerate(csv.reader(text.splitlines(), delimiter=delimiter)) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0][1])
    if width < 2:
        raise DataError(f"{path}: line {rows[0][0]}: need at least one feature and a label")
    label_col = label_column % width if -width <= label_column < width else None
    if label_col is None:
        raise DataError(f"{path}: label column {label_column} out of range for {width} columns")
    header = _looks_like_header(rows[0][1], label_col) if has_header == "auto" else bool(has_header)
    if header:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")

    feats, raw_labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}: line {lineno}: expected {width} fields, found {len(row)}")
        feats.append([_parse_float(c.strip(), lineno, j) for j, c in enumerate(row) if j != label_col])
        raw_labels.append((lineno, row[label_col].strip()))

    if classes is None:
        distinct = {lab for _, lab in raw_labels}
        if all(_is_int(s) for s in distinct):
            ordered = sorted(distinct, key=lambda s: (int(s), s))
        else:
            ordered = sorted(distinct)
        classes = tuple(ordered)
        if len(classes) < 2:
            raise DataError(f"{path}: only one class ({classes[0]!r}) present")
    else:
        classes = tuple(classes)
    index = {name: i for i, name in enumerate(classes)}
    # integer labels compare by value so "01" and "1" agree
    int_index = {int(s): i for s, i in index.items() if _is_int(s)}
    labels = []
    for lineno, lab in raw_labels:
        if lab in index:
            labels.append(index[lab])
        elif _is_int(lab) and int(lab) in int_index:
            labels.append(int_index[int(lab)])
        else:
            raise DataError(f"{path}: line {lineno}: unknown class label {lab!r}")
    return Dataset(np.array(feats, dtype=np.float64), np.array(labels), len(classes), classes)


def save_csv(dataset, path, header=None):
    """Write features then the label (by class name when known), full precision."""
    names = dataset.class_names or tuple(str(i) for i in range(dataset.class_count))
    if header is None:
        header = [f"x{j}" for j in range(dataset.d)] + ["label"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in x] + [names[y]])


# ---------------------------------------------------------------- preprocessing


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, features):
        safe = np.where(self.std < 1e-12, 1.0, self.std)
        z = (np.asarray(features, dtype=np.float64) - self.mean) / safe
        z[:, self.std < 1e-12] = 0.0
        return z


def fit_standardizer(dataset):
    return Standardizer(dataset.features.mean(axis=0), dataset.features.std(axis=0))


def standardize(train, test):
    """Z-score both splits with train statistics; near-constant features become 0."""
    if train.d != test.d:
        raise DataError(f"feature dimension mismatch: train {train.d}, test {test.d}")
    st = fit_standardizer(train)
    new_train = Dataset(st.apply(train.features), train.labels, train.class_count, train.class_names)
    new_test = Dataset(st.apply(test.features), test.labels, test.class_count, test.class_names)
    return new_train, new_test, st


def split(dataset, test_fraction, seed):
    """Shuffled train/test split, stratified when every class has >= 2 samples."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = Rng(seed).substream("split")
    counts = np.bincount(dataset.labels, minlength=dataset.class_count)
    present = counts[counts > 0]
    test_idx = []
    if np.all(present >= 2):
        for c in range(dataset.class_count):
            members = np.flatnonzero(dataset.labels == c)
            if members.size == 0:
                continue
            members = members[rng.permutation(members.size)]
            take = int(round(members.size * test_fraction))
            take = min(max(take, 1), members.size - 1)
            test_idx.extend(members[:take].tolist())
    else:
        order = rng.permutation(dataset.n)
        take = int(round(dataset.n * test_fraction))
        test_idx = order[:take].tolist()
    test_idx = np.array(sorted(test_idx), dtype=np.int64)
    mask = np.zeros(dataset.n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    if test_idx.size == 0 or train_idx.size == 0:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty split for n={dataset.n}")
    return dataset.subset(train_idx), dataset.subset(test_idx)
