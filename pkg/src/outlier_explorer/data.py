"""Dataset representation, CSV ingestion and synthetic labeled corpora.

Datasets are plain real-valued matrices (points x features) with named
columns. Labeled datasets additionally carry a binary outlier flag per
point. Everything is immutable after construction so detector executions
can share a dataset across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LabelError, MalformedCellError, SizeError


@dataclass(frozen=True)
class DataMatrix:
    """An n x m matrix of finite reals with unique column names."""

    values: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if values.ndim != 2:
            raise SizeError(f"expected a 2-D matrix, got shape {values.shape}")
        n, m = values.shape
        if n < 2:
            raise SizeError(f"need at least 2 points, got {n}")
        if m < 1:
            raise SizeError("need at least 1 feature")
        if len(self.column_names) != m:
            raise SizeError(
                f"{len(self.column_names)} column names for {m} columns"
            )
        if len(set(self.column_names)) != m:
            raise SizeError("column names must be unique")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise MalformedCellError(int(bad[0]), self.column_names[bad[1]], values[tuple(bad)])

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def column(self, index: int) -> np.ndarray:
        return self.values[:, index]


@dataclass(frozen=True)
class LabeledDataset:
    """A DataMatrix plus expert outlier labels (1 = outlier, 0 = normal)."""

    data: DataMatrix
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        if labels.shape != (self.data.n,):
            raise LabelError(
                f"labels shape {labels.shape} does not match point count {self.data.n}"
            )
        if not np.all((labels == 0) | (labels == 1)):
            raise LabelError("labels must be 0 or 1")
        if labels.min() == labels.max():
            raise LabelError("need at least one outlier and one normal point")

    @property
    def outlier_count(self) -> int:
        return int(self.labels.sum())


@dataclass(frozen=True, order=True)
class FeatureSubspace:
    """A strictly increasing, non-empty tuple of column indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", indices)
        if not indices:
            raise SizeError("a feature subspace cannot be empty")
        if any(i < 0 for i in indices):
            raise SizeError("column indices must be non-negative")
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise SizeError("column indices must be strictly increasing")

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, index):
        return index in self.indices

    def validate_for(self, data: DataMatrix):
        if self.indices[-1] >= data.m:
            raise SizeError(
                f"subspace index {self.indices[-1]} out of range for {data.m} columns"
            )

    def project(self, data: DataMatrix) -> np.ndarray:
        """Columns of ``data`` restricted to this subspace, as a dense array."""
        self.validate_for(data)
        return data.values[:, list(self.indices)]

    def describe(self, data: DataMatrix | None = None) -> str:
        if data is None:
            return "{" + ",".join(str(i) for i in self.indices) + "}"
        return "{" + ",".join(data.column_names[i] for i in self.indices) + "}"


def normalize_feature(column) -> np.ndarray:
    """Z-score a column with the population (1/n) standard deviation.

    Zero-variance columns normalize to all zeros instead of erroring: they
    carry no signal and are handled downstream by redundancy pruning.
    """
    column = np.asarray(column, dtype=float)
    std = column.std()
    if std == 0.0:
        return np.zeros_like(column)
    return (column - column.mean()) / std


def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise MalformedCellError(row, column, text) from None
    if not np.isfinite(value):
        raise MalformedCellError(row, column, text)
    return value


def load_csv(path, label_column: str | None = None):
    """Load a comma-separated dataset with a header row.

    Returns a LabeledDataset when ``label_column`` names a column (stripped
    from the features and parsed as {0, 1}), otherwise a DataMatrix.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SizeError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        rows = [row for row in reader if row]

    if label_column is not None and label_column not in header:
        raise LabelError(f"label column {label_column!r} not found in header")
    label_idx = header.index(label_column) if label_column is not None else None
    feature_names = [h for i, h in enumerate(header) if i != label_idx]
    if not feature_names:
        raise SizeError("no feature columns besides the label column")
    if len(rows) < 2:
        raise SizeError(f"{path}: need at least 2 data rows, got {len(rows)}")

    values = np.empty((len(rows), len(feature_names)))
    labels = np.empty(len(rows), dtype=int) if label_idx is not None else None
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise MalformedCellError(r, header[min(len(row), len(header) - 1)],
                                     f"expected {len(header)} cells, got {len(row)}")
        c_out = 0
        for c, cell in enumerate(row):
            if c == label_idx:
                value = _parse_cell(cell, r, header[c])
                if value not in (0.0, 1.0):
                    raise LabelError(
                        f"label at row {r} must be 0 or 1, got {cell!r}"
                    )
                labels[r] = int(value)
            else:
                values[r, c_out] = _parse_cell(cell, r, header[c])
                c_out += 1

    matrix = DataMatrix(values, tuple(feature_names))
    if labels is None:
        return matrix
    return LabeledDataset(matrix, labels)


def save_csv(dataset, path, label_column: str = "label"):
    """Write a DataMatrix or LabeledDataset; inverse of :func:`load_csv`.

    Values are written with 17 significant digits so a round trip
    reproduces them to full double precision.
    """
    path = Path(path)
    if isinstance(dataset, LabeledDataset):
        matrix, labels = dataset.data, dataset.labels
    else:
        matrix, labels = dataset, None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(matrix.column_names)
    if labels is not None:
        header.append(label_column)
    writer.writerow(header)
    for r in range(matrix.n):
        row = [format(v, ".17g") for v in matrix.values[r]]
        if labels is not None:
            row.append(str(int(labels[r])))
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


@dataclass(frozen=True)
class CorpusSpec:
    """Knobs for the synthetic labeled corpus generator.

    By default each outlier is drawn uniformly from the inflated bounding
    box of the inlier cloud in every coordinate. Setting
    ``displaced_dims_range`` restricts the box draw to a random subset of
    coordinates per outlier (the rest stay at mixture values), which
    produces harder, subspace-confined anomalies.
    """

    n_range: tuple[int, int] = (100, 500)
    m_range: tuple[int, int] = (4, 30)
    outlier_ratio_range: tuple[float, float] = (0.02, 0.25)
    components_range: tuple[int, int] = (1, 4)
    box_inflation: float = 1.8
    displaced_dims_range: tuple[int, int] | None = None


def _synthetic_dataset(rng: np.random.Generator, spec: CorpusSpec, index: int) -> LabeledDataset:
    n = int(rng.integers(spec.n_range[0], spec.n_range[1] + 1))
    m = int(rng.integers(spec.m_range[0], spec.m_range[1] + 1))
    ratio = rng.uniform(*spec.outlier_ratio_range)
    n_out = max(1, int(round(ratio * n)))
    n_in = n - n_out

    n_components = int(rng.integers(spec.components_range[0], spec.components_range[1] + 1))
    centers = rng.uniform(-8.0, 8.0, size=(n_components, m))
    scales = rng.uniform(0.5, 2.0, size=(n_components, m))
    assignment = rng.integers(0, n_components, size=n_in)
    inliers = centers[assignment] + rng.standard_normal((n_in, m)) * scales[assignment]

    lo, hi = inliers.min(axis=0), inliers.max(axis=0)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    half = np.maximum(half, 1.0) * spec.box_inflation
    if spec.displaced_dims_range is None:
        outliers = rng.uniform(mid - half, mid + half, size=(n_out, m))
    else:
        base_assignment = rng.integers(0, n_components, size=n_out)
        outliers = (centers[base_assignment]
                    + rng.standard_normal((n_out, m)) * scales[base_assignment])
        d_lo, d_hi = spec.displaced_dims_range
        d_hi = min(d_hi, m)
        d_lo = min(d_lo, d_hi)
        for i in range(n_out):
            k = int(rng.integers(d_lo, d_hi + 1))
            dims = rng.choice(m, size=k, replace=False)
            outliers[i, dims] = rng.uniform(mid[dims] - half[dims],
                                            mid[dims] + half[dims])

    values = np.vstack([inliers, outliers])
    labels = np.concatenate([np.zeros(n_in, dtype=int), np.ones(n_out, dtype=int)])
    order = rng.permutation(n)
    names = tuple(f"f{j}" for j in range(m))
    return LabeledDataset(DataMatrix(values[order], names), labels[order])


def generate_synthetic_corpus(count: int, rng_seed: int,
                              spec: CorpusSpec = CorpusSpec()) -> list[LabeledDataset]:
    """Deterministically generate ``count`` labeled datasets.

    Inliers come from a random Gaussian mixture; outliers are planted
    uniformly in an inflated bounding box of the inlier cloud.
    """
    if count < 1:
        raise SizeError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    return [_synthetic_dataset(rng, spec, i) for i in range(count)]


def planted_outlier_dataset(n: int = 200, dims: int = 5, n_outliers: int = 5,
                            displacement: float = 10.0, seed: int = 0) -> LabeledDataset:
    """A unit Gaussian cluster with far-displaced labeled outliers.

    Each outlier sits at ``displacement`` standard deviations from the
    cluster center along a distinct diagonal direction, so it stays
    outlying in every axis-parallel projection.
    """
    rng = np.random.default_rng(seed)
    n_in = n - n_outliers
    inliers = rng.standard_normal((n_in, dims))
    signs = np.ones((n_outliers, dims))
    for i in range(n_outliers):
        flip = rng.integers(0, 2, size=dims).astype(bool)
        signs[i, flip] = -1.0
    outliers = signs * (displacement / np.sqrt(dims)) + 0.05 * rng.standard_normal((n_outliers, dims))
    values = np.vstack([inliers, outliers])
    labels = np.concatenate([np.zeros(n_in, dtype=int), np.ones(n_outliers, dtype=int)])
    names = tuple(f"f{j}" for j in range(dims))
    return LabeledDataset(DataMatrix(values, names), labels)
