"""Dataset schemas, CSV ingestion, preprocessing, splitting, and metrics.

Numerical features are min-max scaled to [0, 1] using the raw ranges declared
in the schema (not ranges estimated from the data, so train/test scaling is
identical and property boxes stay interpretable).  Categorical features are
one-hot encoded in schema level order.  Rows with missing or unparseable
cells are dropped.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigurationError, InputError
from .nn_core import MLPNetwork, forward_batch, predict_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericalFeature:
    name: str
    raw_min: float
    raw_max: float


@dataclass(frozen=True)
class CategoricalFeature:
    name: str
    levels: tuple[str, ...]


Feature = Union[NumericalFeature, CategoricalFeature]


@dataclass(frozen=True)
class LabelSpec:
    name: str
    positive_value: str


@dataclass(frozen=True)
class DatasetSchema:
    features: tuple[Feature, ...]
    sensitive_feature: str
    label: LabelSpec

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigurationError("feature names must be unique")
        if self.label.name in names:
            raise ConfigurationError("label name collides with a feature name")
        for f in self.features:
            if isinstance(f, CategoricalFeature):
                if len(f.levels) < 2:
                    raise ConfigurationError(f"categorical feature {f.name!r} needs >= 2 levels")
                if len(set(f.levels)) != len(f.levels):
                    raise ConfigurationError(f"categorical feature {f.name!r} has duplicate levels")
            else:
                if not (np.isfinite(f.raw_min) and np.isfinite(f.raw_max)):
                    raise ConfigurationError(f"numerical feature {f.name!r} has non-finite range")
                if f.raw_min >= f.raw_max:
                    raise ConfigurationError(
                        f"numerical feature {f.name!r} has empty range [{f.raw_min}, {f.raw_max}]"
                    )
        sens = self.feature(self.sensitive_feature)
        if sens is None:
            raise ConfigurationError(f"sensitive feature {self.sensitive_feature!r} is not in the schema")
        if not isinstance(sens, CategoricalFeature):
            raise ConfigurationError(f"sensitive feature {self.sensitive_feature!r} must be categorical")

    def feature(self, name: str) -> Feature | None:
        for f in self.features:
            if f.name == name:
                return f
        return None

    @property
    def input_dim(self) -> int:
        return sum(1 if isinstance(f, NumericalFeature) else len(f.levels) for f in self.features)

    def column_map(self) -> dict[str, tuple[int, int]]:
        """Feature name -> half-open column range in the expanded row."""
        spans = {}
        col = 0
        for f in self.features:
            width = 1 if isinstance(f, NumericalFeature) else len(f.levels)
            spans[f.name] = (col, col + width)
            col += width
        return spans

    def numerical_features(self) -> list[NumericalFeature]:
        return [f for f in self.features if isinstance(f, NumericalFeature)]

    def categorical_features(self) -> list[CategoricalFeature]:
        return [f for f in self.features if isinstance(f, CategoricalFeature)]

    def numerical_columns(self) -> np.ndarray:
        spans = self.column_map()
        return np.asarray(
            [spans[f.name][0] for f in self.features if isinstance(f, NumericalFeature)],
            dtype=np.int64,
        )

    @property
    def sensitive(self) -> CategoricalFeature:
        f = self.feature(self.sensitive_feature)
        assert isinstance(f, CategoricalFeature)
        return f


def schema_from_dict(doc: dict) -> DatasetSchema:
    try:
        features = []
        for item in doc["features"]:
            kind = item["kind"]
            if kind == "numerical":
                features.append(
                    NumericalFeature(item["name"], float(item["raw_min"]), float(item["raw_max"]))
                )
            elif kind == "categorical":
                features.append(CategoricalFeature(item["name"], tuple(item["levels"])))
            else:
                raise ConfigurationError(f"unknown feature kind {kind!r}")
        label = LabelSpec(doc["label"]["name"], str(doc["label"]["positive_value"]))
        return DatasetSchema(tuple(features), doc["sensitive_feature"], label)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed schema: {exc}") from exc


def load_schema(path) -> DatasetSchema:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_dict(json.load(fh))


@dataclass(frozen=True)
class Dataset:
    """Preprocessed rows (scaled + one-hot), labels in {0, 1}, column spans."""

    rows: np.ndarray
    labels: np.ndarray
    column_map: dict[str, tuple[int, int]]
    schema: DatasetSchema

    def __post_init__(self):
        if self.rows.ndim != 2 or self.labels.shape != (self.rows.shape[0],):
            raise InputError("rows and labels have inconsistent shapes")

    def __len__(self) -> int:
        return self.rows.shape[0]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.rows[idx], self.labels[idx], self.column_map, self.schema)


def _encode_row(record: dict[str, str], schema: DatasetSchema):
    """Returns (vector, label, status) where status is 'ok', 'missing' or 'unknown_level'."""
    cols: list[float] = []
    for f in schema.features:
        raw = record[f.name].strip()
        if isinstance(f, NumericalFeature):
            try:
                v = float(raw)
            except ValueError:
                return None, None, "missing"
            if not np.isfinite(v):
                return None, None, "missing"
            scaled = (v - f.raw_min) / (f.raw_max - f.raw_min)
            cols.append(min(max(scaled, 0.0), 1.0))
        else:
            if raw == "" or raw == "?":
                return None, None, "missing"
            if raw not in f.levels:
                return None, None, "unknown_level"
            cols.extend(1.0 if raw == level else 0.0 for level in f.levels)
    raw_label = record[schema.label.name].strip()
    if raw_label == "" or raw_label == "?":
        return None, None, "missing"
    label = 1 if raw_label == schema.label.positive_value else 0
    return cols, label, "ok"


def load_and_preprocess(csv_path, schema: DatasetSchema) -> Dataset:
    """Read an RFC-4180 CSV with a header row and apply the schema.

    Rows with missing/unparseable cells are dropped silently; rows with
    unknown categorical levels are dropped and counted in a warning.
    """
    required = [f.name for f in schema.features] + [schema.label.name]
    rows: list[list[float]] = []
    labels: list[int] = []
    n_unknown = 0
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{csv_path}: empty CSV") from None
        header = [h.strip() for h in header]
        missing_cols = [name for name in required if name not in header]
        if missing_cols:
            raise ConfigurationError(f"{csv_path}: missing columns {missing_cols}")
        index = {name: header.index(name) for name in required}
        for raw in reader:
            if len(raw) < len(header):
                continue
            record = {name: raw[i] for name, i in index.items()}
            vec, label, status = _encode_row(record, schema)
            if status == "unknown_level":
                n_unknown += 1
                continue
            if status != "ok":
                continue
            rows.append(vec)
            labels.append(label)
    if n_unknown:
        logger.warning("%s: dropped %d rows with unknown categorical levels", csv_path, n_unknown)
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), schema.input_dim)
    return Dataset(matrix, np.asarray(labels, dtype=np.int64), schema.column_map(), schema)


def load_points(csv_path, schema: DatasetSchema) -> np.ndarray:
    """Read feature-only rows (no label column needed) into expanded vectors."""
    rows: list[list[float]] = []
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigurationError(f"{csv_path}: empty CSV") from None
        missing_cols = [f.name for f in schema.features if f.name not in header]
        if missing_cols:
            raise ConfigurationError(f"{csv_path}: missing columns {missing_cols}")
        index = {f.name: header.index(f.name) for f in schema.features}
        for raw in reader:
            if len(raw) < len(header):
                continue
            record = {name: raw[i] for name, i in index.items()}
            record[schema.label.name] = schema.label.positive_value  # dummy, unused
            vec, _, status = _encode_row(record, schema)
            if status == "ok":
                rows.append(vec)
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), schema.input_dim)


def split(ds: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then prefix split; partitions are disjoint with union = ds."""
    if not 0.0 < train_fraction < 1.0:
        raise InputError("train_fraction must be strictly between 0 and 1")
    n = len(ds)
    if n < 2:
        raise InputError("dataset needs at least 2 rows to split")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


def positivity_rate(net: MLPNetwork, ds: Dataset) -> float:
    """Percentage of rows classified 1."""
    if len(ds) == 0:
        raise InputError("positivity_rate of an empty dataset")
    return 100.0 * float(np.mean(predict_batch(net, ds.rows) == 1))


def label_positivity(ds: Dataset) -> float:
    """Percentage of rows whose label is 1."""
    if len(ds) == 0:
        raise InputError("label_positivity of an empty dataset")
    return 100.0 * float(np.mean(ds.labels == 1))


def accuracy(net: MLPNetwork, ds: Dataset) -> float:
    """Percentage of rows with predicted class equal to the label."""
    if len(ds) == 0:
        raise InputError("accuracy of an empty dataset")
    return 100.0 * float(np.mean(predict_batch(net, ds.rows) == ds.labels))


def mean_bce(net: MLPNetwork, ds: Dataset) -> float:
    from .nn_core import PROB_CLIP

    _, probs = forward_batch(net, ds.rows)
    p = np.clip(probs, PROB_CLIP, 1.0 - PROB_CLIP)
    y = ds.labels
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1.0 - p))))
