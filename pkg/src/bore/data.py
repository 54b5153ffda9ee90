"""Dataset ingestion, [0, 1] scaling, stratified splitting and balanced bags."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

from .exceptions import (
    CsvParseError,
    LabelColumnError,
    MissingFileError,
    NonFiniteValueError,
    SamplingError,
    ShapeError,
)

_MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    row_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.row_ids:
            object.__setattr__(self, "row_ids", [str(i) for i in range(len(self.labels))])
        if self.features.ndim != 2 or self.features.shape[0] != len(self.labels):
            raise ShapeError("features must be n x k with one label per row")
        if len(self.row_ids) != len(self.labels):
            raise ShapeError("one row id per row is required")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ShapeError("feature names must be unique")
        if len(self.feature_names) != self.features.shape[1]:
            raise ShapeError("one feature name per column is required")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def n_outliers(self) -> int:
        return int(self.labels.sum())

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=int)
        return LabeledDataset(
            self.features[rows],
            self.labels[rows],
            list(self.feature_names),
            [self.row_ids[i] for i in rows],
        )


@dataclass(frozen=True)
class ScaleParams:
    min: np.ndarray
    max: np.ndarray


@dataclass(frozen=True)
class Bag:
    indices: np.ndarray
    bag_id: int


@dataclass(frozen=True)
class BagSpec:
    num_bags: int = 50
    outlier_fraction: float = 0.70
    seed: int = 0

    def __post_init__(self):
        if self.num_bags < 1:
            raise SamplingError("num_bags must be >= 1")
        if not 0.0 < self.outlier_fraction <= 1.0:
            raise SamplingError("outlier_fraction must lie in (0, 1]")


def _parse_float(token: str, row: int, column: str) -> float:
    if token.strip().lower() in _MISSING_TOKENS:
        raise NonFiniteValueError(f"missing value at row {row}, column {column!r}")
    try:
        value = float(token)
    except ValueError:
        raise CsvParseError(
            f"non-numeric value {token!r} at row {row}, column {column!r}", row, column
        ) from None
    if not math.isfinite(value):
        raise NonFiniteValueError(f"non-finite value {token!r} at row {row}, column {column!r}")
    return value


def load_csv(path, label_column: str = "label", id_column: str | None = None) -> LabeledDataset:
    """Read a comma-separated file with a header row.

    Rows are numbered from 1 (the first data line) in error messages. The label
    column must hold 0/1 and is removed from the feature matrix; an optional id
    column is kept verbatim as row ids.
    """
    if not os.path.isfile(path):
        raise MissingFileError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvParseError(f"{path} is empty; a header row is required") from None
        rows = [r for r in reader if r]

    if label_column not in header:
        raise LabelColumnError(f"label column {label_column!r} not found in header of {path}")
    if id_column is not None and id_column not in header:
        raise LabelColumnError(f"id column {id_column!r} not found in header of {path}")
    label_pos = header.index(label_column)
    id_pos = header.index(id_column) if id_column is not None else None
    feature_pos = [i for i in range(len(header)) if i not in (label_pos, id_pos)]
    names = [header[i] for i in feature_pos]

    X = np.empty((len(rows), len(feature_pos)))
    y = np.empty(len(rows), dtype=np.int64)
    ids = []
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise CsvParseError(
                f"row {r} has {len(row)} fields, header has {len(header)}", r, None
            )
        raw_label = row[label_pos].strip()
        try:
            label = float(raw_label)
        except ValueError:
            label = None
        if label not in (0.0, 1.0):
            raise LabelColumnError(
                f"label column {label_column!r} must be 0/1, got {raw_label!r} at row {r}"
            )
        y[r - 1] = int(label)
        for j, pos in enumerate(feature_pos):
            X[r - 1, j] = _parse_float(row[pos], r, header[pos])
        ids.append(row[id_pos].strip() if id_pos is not None else str(r - 1))
    return LabeledDataset(X, y, names, ids)


def fit_minmax(train: LabeledDataset | np.ndarray) -> ScaleParams:
    X = train.features if isinstance(train, LabeledDataset) else np.asarray(train, float)
    if X.shape[0] < 1:
        raise ShapeError("cannot fit scaling on zero rows")
    return ScaleParams(X.min(axis=0), X.max(axis=0))


def apply_minmax(data: np.ndarray, params: ScaleParams) -> np.ndarray:
    """Map columns to [0, 1]; constant columns become 0, out-of-range values clamp."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(params.min):
        raise ShapeError(
            f"expected {len(params.min)} columns, got shape {data.shape}"
        )
    span = params.max - params.min
    safe = np.where(span > 0, span, 1.0)
    out = (data - params.min) / safe
    out[:, span <= 0] = 0.0
    return np.clip(out, 0.0, 1.0)


def round_half_up(x: float) -> int:
    # Decimal(str(.)) sidesteps binary artefacts like 0.6 * 351 = 210.59999...
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def train_test_split(
    data: LabeledDataset, train_fraction: float = 0.6, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified split.

    The training part holds round_half_up(f * n) rows of which
    round_half_up(f * n_out) are outliers (each class keeps at least one row on
    either side). Row order inside each part follows the original file.
    """
    if not 0.0 < train_fraction < 1.0:
        raise SamplingError("train_fraction must lie strictly between 0 and 1")
    out_rows = np.flatnonzero(data.labels == 1)
    in_rows = np.flatnonzero(data.labels == 0)
    if len(out_rows) < 2 or len(in_rows) < 2:
        raise SamplingError("stratified split needs at least 2 members of each class")

    n_train = round_half_up(train_fraction * data.n)
    n_out_train = min(max(round_half_up(train_fraction * len(out_rows)), 1), len(out_rows) - 1)
    n_in_train = min(max(n_train - n_out_train, 1), len(in_rows) - 1)

    rng = np.random.default_rng(seed)
    train_rows = np.concatenate(
        [
            rng.permutation(out_rows)[:n_out_train],
            rng.permutation(in_rows)[:n_in_train],
        ]
    )
    mask = np.zeros(data.n, dtype=bool)
    mask[train_rows] = True
    return data.subset(np.flatnonzero(mask)), data.subset(np.flatnonzero(~mask))


def bag_outlier_count(n_out: int, fraction: float) -> int:
    # round() first so 0.7 * 10 = 7.000000000000001 still gives 7
    return max(1, math.ceil(round(fraction * n_out, 9)))


def sample_balanced_bags(labels: Sequence[int] | np.ndarray, spec: BagSpec) -> list[Bag]:
    """Draw ``spec.num_bags`` bags with p outliers and p inliers each.

    p = ceil(outlier_fraction * n_out). Within a bag both classes are drawn
    without replacement; bags are independent of each other.
    """
    labels = np.asarray(labels)
    out_rows = np.flatnonzero(labels == 1)
    in_rows = np.flatnonzero(labels == 0)
    if len(out_rows) == 0:
        raise SamplingError("no outliers available for bagging")
    p = bag_outlier_count(len(out_rows), spec.outlier_fraction)
    if p > len(in_rows):
        raise SamplingError(f"bags need {p} inliers but only {len(in_rows)} are available")
    rng = np.random.default_rng(spec.seed)
    bags = []
    for b in range(spec.num_bags):
        outs = rng.choice(out_rows, size=p, replace=False)
        ins = rng.choice(in_rows, size=p, replace=False)
        bags.append(Bag(np.sort(np.concatenate([outs, ins])), b))
    return bags
