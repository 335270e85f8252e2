"""Tabular classification data: CSV loading, encoding, splitting, normalization.

Feature matrices are float64 and read-only once built, so they can be shared
freely across worker threads. All randomness is driven by explicit seeds.
"""

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.5, 0.25, 0.25)


class TableParseError(ValueError):
    """Raised when a file or table cannot be turned into usable columns."""


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RawTable:
    """String-valued table straight off disk.

    rows: one list of cell strings per data row, all with the same arity.
    label_column: name of the column holding class labels.
    """

    rows: tuple
    column_names: tuple
    label_column: str

    def __post_init__(self):
        if self.label_column not in self.column_names:
            raise TableParseError(f"label column {self.label_column!r} not among columns")
        arity = len(self.column_names)
        for i, row in enumerate(self.rows):
            if len(row) != arity:
                raise TableParseError(f"row {i + 1}: expected {arity} cells, got {len(row)}")

    @property
    def n_rows(self):
        return len(self.rows)


@dataclass(frozen=True)
class Dataset:
    """Encoded numeric dataset.

    features: (L, H) float64 matrix.
    labels: (L,) integer vector with values in [0, K).
    feature_ranges: per-feature (lo, hi) pairs; for the parts of a split these
    are always the training part's empirical ranges.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    class_names: tuple
    feature_ranges: tuple

    def __post_init__(self):
        object.__setattr__(self, "features", _readonly(np.asarray(self.features, dtype=np.float64)))
        object.__setattr__(self, "labels", _readonly(np.asarray(self.labels, dtype=np.int64)))
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match the number of rows")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError("feature_names arity mismatch")
        if len(self.feature_ranges) != self.features.shape[1]:
            raise ValueError("feature_ranges arity mismatch")
        if len(self.class_names) < 2:
            raise ValueError("need at least 2 classes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ValueError("labels must index class_names")

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)


@dataclass(frozen=True)
class SplitDataset:
    """Training / validation / test partition of one encoded dataset."""

    train: Dataset
    validation: Dataset
    test: Dataset
    seed: int


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature centering and scaling parameters, fit on training rows only."""

    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _readonly(np.asarray(self.means, dtype=np.float64)))
        object.__setattr__(self, "scales", _readonly(np.asarray(self.scales, dtype=np.float64)))
        if self.means.shape != self.scales.shape or self.means.ndim != 1:
            raise ValueError("means and scales must be 1-d and of equal length")
        if np.any(self.scales <= 0):
            raise ValueError("scales must be strictly positive")


def load_csv(path, label_column, has_header=True, delimiter=","):
    """Read a delimiter-separated text file into a RawTable.

    ``delimiter`` may be any single character, or None to split rows on
    arbitrary whitespace. ``label_column`` is a column name or a 0-based
    column index (exact name match wins over index interpretation).
    Ragged rows raise TableParseError naming the offending line.
    """
    rows = []
    with open(path, newline="") as fh:
        if delimiter is None:
            raw_rows = [line.split() for line in fh if line.strip()]
        else:
            raw_rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    if not raw_rows:
        raise TableParseError(f"{path}: file is empty")
    raw_rows = [[cell.strip() for cell in row] for row in raw_rows]
    if has_header:
        column_names = tuple(raw_rows[0])
        rows = raw_rows[1:]
    else:
        column_names = tuple(f"col{i}" for i in range(len(raw_rows[0])))
        rows = raw_rows
    arity = len(column_names)
    for i, row in enumerate(rows):
        if len(row) != arity:
            lineno = i + 2 if has_header else i + 1
            raise TableParseError(f"{path}: line {lineno}: expected {arity} cells, got {len(row)}")
    return RawTable(
        rows=tuple(tuple(r) for r in rows),
        column_names=column_names,
        label_column=_resolve_column(column_names, label_column),
    )


def _resolve_column(column_names, ident):
    if isinstance(ident, str) and ident in column_names:
        return ident
    try:
        idx = int(ident)
    except (TypeError, ValueError):
        raise TableParseError(f"no column named {ident!r}") from None
    if not -len(column_names) <= idx < len(column_names):
        raise TableParseError(f"column index {idx} out of range for {len(column_names)} columns")
    return column_names[idx]


def drop_columns(raw, columns):
    """Return a RawTable without the given columns (names or 0-based indices)."""
    doomed = {_resolve_column(raw.column_names, c) for c in columns}
    if raw.label_column in doomed:
        raise TableParseError("cannot drop the label column")
    keep = [i for i, name in enumerate(raw.column_names) if name not in doomed]
    return RawTable(
        rows=tuple(tuple(row[i] for i in keep) for row in raw.rows),
        column_names=tuple(raw.column_names[i] for i in keep),
        label_column=raw.label_column,
    )


def encode(raw):
    """Turn a RawTable into a numeric Dataset.

    Fully numeric columns pass through as floats. Any other column is treated
    as categorical and mapped to ordinal codes 0..cardinality-1 in order of
    first appearance (one column stays one feature). Labels are mapped to
    0..K-1 in first-appearance order. Empty cells are rejected.
    """
    for i, row in enumerate(raw.rows):
        for cell in row:
            if cell == "":
                raise TableParseError(f"row {i + 1}: empty cell (missing values are not supported)")

    label_idx = raw.column_names.index(raw.label_column)
    class_names = []
    class_codes = {}
    labels = np.empty(raw.n_rows, dtype=np.int64)
    for i, row in enumerate(raw.rows):
        value = row[label_idx]
        if value not in class_codes:
            class_codes[value] = len(class_names)
            class_names.append(value)
        labels[i] = class_codes[value]
    if len(class_names) < 2:
        raise TableParseError(f"label column {raw.label_column!r} has a single class")

    feature_idx = [i for i in range(len(raw.column_names)) if i != label_idx]
    features = np.empty((raw.n_rows, len(feature_idx)), dtype=np.float64)
    for h, col in enumerate(feature_idx):
        cells = [row[col] for row in raw.rows]
        features[:, h] = _encode_column(cells)
        bad = np.flatnonzero(~np.isfinite(features[:, h]))
        if bad.size:
            raise TableParseError(
                f"row {bad[0] + 1}: non-finite value {cells[bad[0]]!r} "
                f"in column {raw.column_names[col]!r}"
            )
        if raw.n_rows and np.all(features[:, h] == features[0, h]):
            logger.warning("feature %r is constant", raw.column_names[col])

    ranges = _column_ranges(features)
    return Dataset(
        features=features,
        labels=labels,
        feature_names=tuple(raw.column_names[i] for i in feature_idx),
        class_names=tuple(class_names),
        feature_ranges=ranges,
    )


def _encode_column(cells):
    try:
        return np.array([float(c) for c in cells])
    except ValueError:
        pass
    codes = {}
    out = np.empty(len(cells))
    for i, c in enumerate(cells):
        if c not in codes:
            codes[c] = float(len(codes))
        out[i] = codes[c]
    return out


def _column_ranges(features):
    if features.shape[0] == 0:
        return tuple((0.0, 0.0) for _ in range(features.shape[1]))
    return tuple((float(lo), float(hi)) for lo, hi in zip(features.min(axis=0), features.max(axis=0)))


def split(ds, fractions=DEFAULT_FRACTIONS, seed=0):
    """Shuffle rows with a seeded generator and cut into train/validation/test.

    Cut points are floor(f0*L) and floor((f0+f1)*L). The three parts share
    feature and class names; feature_ranges of every part are the empirical
    ranges of the training part.
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ValueError("fractions must be three values summing to 1")
    L = ds.n_samples
    cut1 = math.floor(fractions[0] * L)
    cut2 = math.floor((fractions[0] + fractions[1]) * L)
    if cut1 < 1 or cut2 - cut1 < 1 or L - cut2 < 1:
        raise ValueError(f"{L} rows cannot be split into three nonempty parts with {fractions}")
    perm = np.random.default_rng(seed).permutation(L)
    parts = perm[:cut1], perm[cut1:cut2], perm[cut2:]
    train_ranges = _column_ranges(ds.features[parts[0]])

    def _part(idx):
        return Dataset(
            features=ds.features[idx],
            labels=ds.labels[idx],
            feature_names=ds.feature_names,
            class_names=ds.class_names,
            feature_ranges=train_ranges,
        )

    return SplitDataset(train=_part(parts[0]), validation=_part(parts[1]), test=_part(parts[2]), seed=seed)


def fit_normalizer(train):
    """Per-feature mean and population standard deviation of the training rows.

    Constant columns get scale 1 so centering maps them to all-zero.
    """
    if train.n_samples == 0:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    means = train.features.mean(axis=0)
    scales = train.features.std(axis=0)
    scales = np.where(scales > 0, scales, 1.0)
    return NormalizationStats(means=means, scales=scales)


def apply_normalizer(ds, stats):
    """Standardize every feature with the given stats.

    feature_ranges of the result are recomputed from the transformed data.
    """
    if stats.means.shape[0] != ds.n_features:
        raise ValueError("normalizer arity does not match the dataset")
    transformed = (ds.features - stats.means) / stats.scales
    return Dataset(
        features=transformed,
        labels=ds.labels,
        feature_names=ds.feature_names,
        class_names=ds.class_names,
        feature_ranges=_column_ranges(transformed),
    )


def normalize_split(sd):
    """Standardize all three parts with statistics fit on the training part.

    The normalized parts share the normalized training part's feature ranges.
    Returns the new SplitDataset and the stats used.
    """
    stats = fit_normalizer(sd.train)
    train = apply_normalizer(sd.train, stats)
    validation = _with_ranges(apply_normalizer(sd.validation, stats), train.feature_ranges)
    test = _with_ranges(apply_normalizer(sd.test, stats), train.feature_ranges)
    return SplitDataset(train=train, validation=validation, test=test, seed=sd.seed), stats


def _with_ranges(ds, ranges):
    return Dataset(
        features=ds.features,
        labels=ds.labels,
        feature_names=ds.feature_names,
        class_names=ds.class_names,
        feature_ranges=ranges,
    )


def restrict(ds, feature_indices):
    """Dataset containing only the given feature columns, in the given order."""
    idx = list(feature_indices)
    return Dataset(
        features=ds.features[:, idx],
        labels=ds.labels,
        feature_names=tuple(ds.feature_names[i] for i in idx),
        class_names=ds.class_names,
        feature_ranges=tuple(ds.feature_ranges[i] for i in idx),
    )


def restrict_split(sd, feature_indices):
    return SplitDataset(
        train=restrict(sd.train, feature_indices),
        validation=restrict(sd.validation, feature_indices),
        test=restrict(sd.test, feature_indices),
        seed=sd.seed,
    )


def summarize(sd, name=""):
    """Dataset characteristics of a split, as a JSON-ready dict."""
    ds = sd.train
    return {
        "dataset": name,
        "input_features": ds.n_features,
        "output_classes": ds.n_classes,
        "training_instances": sd.train.n_samples,
        "validation_instances": sd.validation.n_samples,
        "test_instances": sd.test.n_samples,
        "total": sd.train.n_samples + sd.validation.n_samples + sd.test.n_samples,
    }
