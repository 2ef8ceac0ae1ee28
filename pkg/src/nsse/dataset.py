"""Labeled data: CSV ingestion, synthetic fixtures, splits, standardization."""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "DatasetError",
    "LabeledDataset",
    "SplitSpec",
    "Standardizer",
    "read_table",
    "load_csv",
    "split",
    "synth_blobs",
    "synth_moons",
    "standardize",
]


class DatasetError(ValueError):
    """Invalid input data or split request."""


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with contiguous integer class labels.

    Attributes
    ----------
    X : (N, n) ndarray
    labels : (N,) int ndarray with values in ``[0, M)``
    n_classes : int
    feature_names : tuple of str, optional
    class_names : tuple of str, optional
        Original label strings, indexed by the integer label.
    """

    X: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: Optional[tuple] = None
    class_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        labels = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"X must be a non-empty 2-D array, got shape {X.shape}")
        if labels.shape != (X.shape[0],):
            raise DatasetError("labels must have one entry per row of X")
        if not np.all(np.isfinite(X)):
            raise DatasetError("X contains non-finite entries")
        M = int(self.n_classes)
        if labels.min() < 0 or labels.max() >= M:
            raise DatasetError(f"labels must lie in [0, {M})")
        if np.unique(labels).size != M:
            raise DatasetError("every class in [0, M) needs at least one sample")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_classes", M)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, idx):
        """Rows ``idx`` as a new dataset; class indices are kept as-is."""
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.labels[idx], self.n_classes,
                              self.feature_names, self.class_names)


@dataclass(frozen=True)
class SplitSpec:
    per_class_train: int
    seed: int = 0

    def __post_init__(self):
        if int(self.per_class_train) < 1:
            raise DatasetError("per_class_train must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DatasetError("seed must be an unsigned 64-bit integer")


def _parse_label_col(label_col, header, n_cols):
    if isinstance(label_col, str) and not label_col.lstrip("-").isdigit():
        if header is None:
            raise DatasetError(f"label column {label_col!r} given by name but file has no header")
        if label_col not in header:
            raise DatasetError(f"label column {label_col!r} not found in header")
        return header.index(label_col)
    j = int(label_col)
    if j < 0:
        j += n_cols
    if not 0 <= j < n_cols:
        raise DatasetError(f"label column index {label_col} out of range for {n_cols} columns")
    return j


def read_table(path, label_col=0, has_header=True):
    """Read a numeric CSV, optionally splitting off a label column.

    Unlike :func:`load_csv` this permits zero data rows and unlabeled files
    (``label_col=None``).

    Returns
    -------
    X : (N, n) ndarray
    raw_labels : list of str or None
    feature_names : tuple of str or None
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except FileNotFoundError:
        raise DatasetError(f"no such file: {path}") from None
    header = None
    if has_header:
        if not rows:
            raise DatasetError(f"empty file: {path}")
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if header is None and not rows:
        raise DatasetError(f"empty file: {path}")
    n_cols = len(header) if header is not None else len(rows[0])
    j = None if label_col is None else _parse_label_col(label_col, header, n_cols)
    feat_cols = [c for c in range(n_cols) if c != j]
    if not feat_cols:
        raise DatasetError("no feature columns")
    X = np.empty((len(rows), len(feat_cols)))
    raw_labels = [] if j is not None else None
    for r, row in enumerate(rows, start=1):
        if len(row) != n_cols:
            raise DatasetError(f"row {r}: expected {n_cols} columns, found {len(row)}")
        for out_c, c in enumerate(feat_cols):
            try:
                X[r - 1, out_c] = float(row[c])
            except ValueError:
                raise DatasetError(
                    f"row {r}, column {c + 1}: non-numeric value {row[c]!r}") from None
        if j is not None:
            raw_labels.append(row[j].strip())
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise DatasetError(f"row {bad[0] + 1}, column {feat_cols[bad[1]] + 1}: non-finite value")
    names = tuple(header[c] for c in feat_cols) if header is not None else None
    return X, raw_labels, names


def encode_labels(raw_labels):
    """Map labels to ``0..M-1`` in order of first appearance."""
    mapping = {}
    for lab in raw_labels:
        mapping.setdefault(lab, len(mapping))
    codes = np.array([mapping[lab] for lab in raw_labels], dtype=np.int64)
    return codes, tuple(mapping)


def load_csv(path, label_col=0, has_header=True):
    """Load a labeled dataset from CSV.

    ``label_col`` is a column index or a header name. Labels may be any
    strings; they are remapped to contiguous integers by first appearance.
    """
    if label_col is None:
        raise DatasetError("load_csv needs a label column")
    X, raw, names = read_table(path, label_col, has_header)
    if X.shape[0] == 0:
        raise DatasetError(f"empty file: {path}")
    codes, classes = encode_labels(raw)
    return LabeledDataset(X, codes, len(classes), names, classes)


def split(ds, spec):
    """Stratified train/test split with exactly ``per_class_train`` per class."""
    counts = ds.class_counts()
    k = int(spec.per_class_train)
    if k >= counts.min():
        raise DatasetError(
            f"per_class_train={k} must be smaller than the smallest class size {counts.min()}")
    rng = np.random.default_rng(int(spec.seed))
    train_idx, test_idx = [], []
    for m in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == m)
        perm = rng.permutation(members)
        train_idx.append(np.sort(perm[:k]))
        test_idx.append(np.sort(perm[k:]))
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return ds.subset(train_idx), ds.subset(test_idx)


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise DatasetError(f"{name} must be positive, got {v!r}")


def synth_blobs(n_classes, per_class, n_features, spread, separation, seed=0):
    """Isotropic Gaussian blobs.

    Class ``m`` is centred at ``separation * (m // n + 1) * e_(m mod n)``,
    so centres are distinct for any class count. ``spread`` is the noise
    standard deviation and may be zero.
    """
    _check_positive(n_classes=n_classes, per_class=per_class,
                    n_features=n_features, separation=separation)
    if spread < 0:
        raise DatasetError("spread must be non-negative")
    rng = np.random.default_rng(seed)
    centers = np.zeros((n_classes, n_features))
    for m in range(n_classes):
        centers[m, m % n_features] = separation * (m // n_features + 1)
    labels = np.repeat(np.arange(n_classes), per_class)
    X = centers[labels] + spread * rng.standard_normal((labels.size, n_features))
    return LabeledDataset(X, labels, n_classes)


def synth_moons(per_class, noise=0.0, seed=0):
    """Two interleaved half circles (the usual "moons" construction).

    Class 0 lies on the upper unit half circle, class 1 on the lower half
    circle shifted by ``(1, 0.5)``. Gaussian noise of std ``noise`` is added.
    """
    _check_positive(per_class=per_class)
    if noise < 0:
        raise DatasetError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, np.pi, per_class)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 0.5 - np.sin(t)])
    X = np.vstack([upper, lower])
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    labels = np.repeat([0, 1], per_class)
    return LabeledDataset(X, labels, 2)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature affine map ``(x - mean) / scale``.

    ``scale`` is the population standard deviation, or 1 for features whose
    std is below 1e-12 (those are only centred).
    """

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        return (X - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


def standardize(ds):
    """Zero-mean, unit population-std features; returns ``(dataset, record)``."""
    if ds.n_samples < 2:
        raise DatasetError("standardize needs at least two samples")
    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    scale = np.where(std < 1e-12, 1.0, std)
    rec = Standardizer(mean, scale)
    out = LabeledDataset(rec.transform(ds.X), ds.labels, ds.n_classes,
                         ds.feature_names, ds.class_names)
    return out, rec
