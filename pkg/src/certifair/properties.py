"""Fairness properties, the similarity predicate, and input-space partitions.

A property fixes a numerical domain box, per-feature similarity radii, and
the sensitive attribute.  Two expanded inputs are similar when every
numerical feature differs by at most its radius and every non-sensitive
categorical assignment matches; the sensitive assignment is unconstrained.
Verification partitions the input space by categorical assignment: one
partition per (non-sensitive assignment, unordered sensitive level pair).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .data import CategoricalFeature, DatasetSchema, NumericalFeature
from .errors import ConfigurationError, InputError, ResourceError
from .nn_core import MLPNetwork, forward

SIMILARITY_SLACK = 1e-9  # closed-set slack on |x_i - x'_i| <= delta_i
DEFAULT_PARTITION_CAP = 4096


@dataclass(frozen=True)
class FairnessProperty:
    """Domain box and similarity radii, aligned with schema numerical order.

    P1 restricts similarity to pure sensitive-attribute flips (all radii 0);
    P2 additionally lets numerical features drift by delta_i.
    """

    property_class: str
    sensitive_feature: str
    domain: tuple[tuple[float, float], ...]
    delta: tuple[float, ...]

    def __post_init__(self):
        if self.property_class not in ("P1", "P2"):
            raise ConfigurationError(f"property class must be P1 or P2, got {self.property_class!r}")
        if len(self.domain) != len(self.delta):
            raise ConfigurationError("domain and delta lengths differ")
        for lo, hi in self.domain:
            if not (0.0 <= lo <= hi <= 1.0):
                raise ConfigurationError(f"domain interval [{lo}, {hi}] is not within [0, 1]")
        if any(d < 0 for d in self.delta):
            raise ConfigurationError("delta values must be non-negative")
        if self.property_class == "P1" and any(d != 0 for d in self.delta):
            raise ConfigurationError("P1 properties require all delta values to be 0")

    def domain_lo(self) -> np.ndarray:
        return np.asarray([lo for lo, _ in self.domain], dtype=np.float64)

    def domain_hi(self) -> np.ndarray:
        return np.asarray([hi for _, hi in self.domain], dtype=np.float64)

    def delta_array(self) -> np.ndarray:
        return np.asarray(self.delta, dtype=np.float64)


def property_from_dict(doc: dict) -> FairnessProperty:
    try:
        return FairnessProperty(
            property_class=doc["class"],
            sensitive_feature=doc["sensitive_feature"],
            domain=tuple((float(lo), float(hi)) for lo, hi in doc["domain"]),
            delta=tuple(float(d) for d in doc["delta"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed property: {exc}") from exc


def property_to_dict(prop: FairnessProperty) -> dict:
    return {
        "class": prop.property_class,
        "sensitive_feature": prop.sensitive_feature,
        "domain": [[lo, hi] for lo, hi in prop.domain],
        "delta": list(prop.delta),
    }


def load_property(path) -> FairnessProperty:
    with open(path, "r", encoding="utf-8") as fh:
        return property_from_dict(json.load(fh))


def check_property(prop: FairnessProperty, schema: DatasetSchema) -> None:
    """Raise ConfigurationError when the property does not fit the schema."""
    if prop.sensitive_feature != schema.sensitive_feature:
        raise ConfigurationError(
            f"property sensitive feature {prop.sensitive_feature!r} does not match "
            f"schema sensitive feature {schema.sensitive_feature!r}"
        )
    n_num = len(schema.numerical_features())
    if len(prop.domain) != n_num:
        raise ConfigurationError(
            f"property lists {len(prop.domain)} numerical intervals, schema has {n_num}"
        )


@dataclass(frozen=True)
class Partition:
    """One categorical assignment plus an unordered sensitive level pair."""

    nonsensitive_assignment: tuple[tuple[str, str], ...]  # (feature, level) pairs
    sensitive_pair: tuple[str, str]
    numerical_box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.sensitive_pair[0] == self.sensitive_pair[1]:
            raise ConfigurationError("sensitive pair levels must be distinct")

    def assignment_dict(self) -> dict[str, str]:
        return dict(self.nonsensitive_assignment)


@dataclass(frozen=True)
class CounterexamplePair:
    """A similar pair receiving different classes, with exact logits."""

    x: np.ndarray
    x_prime: np.ndarray
    logit_x: float
    logit_x_prime: float
    classes: tuple[int, int]


def make_pair(net: MLPNetwork, x, x_prime) -> CounterexamplePair:
    rx = forward(net, x)
    rp = forward(net, x_prime)
    return CounterexamplePair(
        x=np.asarray(x, dtype=np.float64),
        x_prime=np.asarray(x_prime, dtype=np.float64),
        logit_x=rx.logit,
        logit_x_prime=rp.logit,
        classes=(1 if rx.logit >= 0 else 0, 1 if rp.logit >= 0 else 0),
    )


def is_similar(x, x_prime, prop: FairnessProperty, schema: DatasetSchema) -> bool:
    """Similarity on expanded vectors: numerical drift <= delta, matching
    non-sensitive categoricals, sensitive unconstrained."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x_prime, dtype=np.float64)
    if a.shape != (schema.input_dim,) or b.shape != (schema.input_dim,):
        raise InputError("similarity check on vectors of the wrong dimension")
    spans = schema.column_map()
    delta = prop.delta_array()
    for i, f in enumerate(schema.numerical_features()):
        col = spans[f.name][0]
        if abs(a[col] - b[col]) > delta[i] + SIMILARITY_SLACK:
            return False
    for f in schema.categorical_features():
        if f.name == schema.sensitive_feature:
            continue
        lo, hi = spans[f.name]
        if not np.array_equal(a[lo:hi], b[lo:hi]):
            return False
    return True


def in_domain(x, prop: FairnessProperty, schema: DatasetSchema, slack: float = 0.0) -> bool:
    a = np.asarray(x, dtype=np.float64)
    spans = schema.column_map()
    for i, f in enumerate(schema.numerical_features()):
        col = spans[f.name][0]
        lo, hi = prop.domain[i]
        if not (lo - slack <= a[col] <= hi + slack):
            return False
    return True


def enumerate_partitions(
    prop: FairnessProperty,
    schema: DatasetSchema,
    cap: int = DEFAULT_PARTITION_CAP,
) -> list[Partition]:
    """All (non-sensitive assignment) x (unordered sensitive pair) partitions,
    in schema order then level order."""
    check_property(prop, schema)
    sens = schema.sensitive
    others = [f for f in schema.categorical_features() if f.name != sens.name]
    n_assignments = 1
    for f in others:
        n_assignments *= len(f.levels)
    n_pairs = len(sens.levels) * (len(sens.levels) - 1) // 2
    total = n_assignments * n_pairs
    if total > cap:
        raise ResourceError(f"partition count {total} exceeds cap {cap}")
    pairs = list(itertools.combinations(sens.levels, 2))
    partitions = []
    for combo in itertools.product(*[f.levels for f in others]):
        assignment = tuple((f.name, level) for f, level in zip(others, combo))
        for pair in pairs:
            partitions.append(
                Partition(
                    nonsensitive_assignment=assignment,
                    sensitive_pair=pair,
                    numerical_box=prop.domain,
                )
            )
    return partitions


def validate_counterexample(
    net: MLPNetwork,
    pair: CounterexamplePair,
    prop: FairnessProperty,
    schema: DatasetSchema,
) -> bool:
    """Re-evaluate a candidate pair with exact forward arithmetic.

    True iff the classes genuinely differ, the pair is similar, and both
    points lie in the property domain.
    """
    try:
        class_x = 1 if forward(net, pair.x).logit >= 0 else 0
        class_p = 1 if forward(net, pair.x_prime).logit >= 0 else 0
    except InputError:
        return False
    if class_x == class_p:
        return False
    if not is_similar(pair.x, pair.x_prime, prop, schema):
        return False
    if not in_domain(pair.x, prop, schema) or not in_domain(pair.x_prime, prop, schema):
        return False
    return True
