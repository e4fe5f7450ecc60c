from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from featguard.common.errors import ConfigurationError, DimensionMismatchError
from featguard.core.labels import Label, LabelSet

FeatureTuple = Tuple[Label, ...]


class Weighting(str, Enum):
    equal = "equal"


@dataclass(frozen=True)
class CandidateVector:
    """Possible output labels for one feature tuple: bit i set iff label i is a candidate."""
    bits: Tuple[int, ...]
    weights: Tuple[float, ...]
    unknown: bool = False

    @property
    def count(self) -> int:
        return sum(self.bits)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=float)

    def candidates(self, labels: LabelSet) -> List[Label]:
        return [labels[i] for i, bit in enumerate(self.bits) if bit]

    def __str__(self):
        return "<" + ",".join(str(bit) for bit in self.bits) + ">"


def _equal_weights(bits: Sequence[int]) -> Tuple[float, ...]:
    k = sum(bits)
    return tuple((1.0 / k) if bit else 0.0 for bit in bits) if k else tuple(0.0 for _ in bits)


_WEIGHTINGS = {
    Weighting.equal: _equal_weights,
}


class MappingTable:
    """Catalog from each output label to its feature tuple, and the inverse.

    ``catalog`` is the label-to-features direction; ``inverse`` maps a feature tuple to every output label
    sharing it and realises the stage-two classifier's candidate output.
    """

    def __init__(self, labels: LabelSet, feature_sets: Sequence[LabelSet], catalog: Dict[Label, FeatureTuple]):
        self.labels = labels
        self.feature_sets: Tuple[LabelSet, ...] = tuple(feature_sets)
        self.catalog: Dict[Label, FeatureTuple] = {label: catalog[label] for label in labels}
        inverse: Dict[FeatureTuple, set] = {}
        for label, features in self.catalog.items():
            if len(features) != self.arity:
                raise ConfigurationError("catalog row {label} has {value} features, expected {key}",
                                         label=label.name, value=len(features), key=self.arity)

            for position, feature in enumerate(features):
                if feature not in self.feature_sets[position]:
                    raise ConfigurationError("feature {value} of {label} is not in column {key}",
                                             value=feature.name, label=label.name,
                                             key=self.feature_sets[position].namespace)

            inverse.setdefault(features, set()).add(label)

        self.inverse: Dict[FeatureTuple, FrozenSet[Label]] = {key: frozenset(value) for key, value in inverse.items()}

    @property
    def arity(self) -> int:
        return len(self.feature_sets)

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(feature_set.namespace for feature_set in self.feature_sets)

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, MappingTable):
            return NotImplemented
        return (self.labels == other.labels and self.feature_sets == other.feature_sets
                and self.catalog == other.catalog)

    def candidates_of(self, features: FeatureTuple) -> FrozenSet[Label]:
        return self.inverse.get(tuple(features), frozenset())

    def tuple_for(self, features: Sequence[str]) -> FeatureTuple:
        """Feature tuple from per-column names."""
        if len(features) != self.arity:
            raise DimensionMismatchError("feature tuple has arity {value}, catalog has {key}",
                                         value=len(features), key=self.arity)
        return tuple(column.label(name) for column, name in zip(self.feature_sets, features))

    def project(self, positions: Sequence[int]) -> "MappingTable":
        """Same catalog restricted to the given feature columns."""
        feature_sets = [self.feature_sets[i] for i in positions]
        catalog = {label: tuple(features[i] for i in positions) for label, features in self.catalog.items()}
        return MappingTable(self.labels, feature_sets, catalog)


def _check_unique(names: Sequence[str]):
    seen = set()
    for name in names:
        if name in seen:
            raise ConfigurationError("duplicate label {label} in catalog", label=name)
        seen.add(name)


def build_mapping(catalog: Sequence[Tuple[Label, FeatureTuple]],
                  feature_sets: Optional[Sequence[LabelSet]] = None) -> MappingTable:
    """Mapping table from catalog rows.

    The output label set keeps row order. Without ``feature_sets`` each feature column's label set is built
    from its values in order of first appearance, under the namespace the values carry.
    """
    names = [label.name for label, _ in catalog]
    _check_unique(names)

    if not catalog:
        return MappingTable(LabelSet([], namespace=""), feature_sets or [], {})

    namespace = catalog[0][0].namespace
    labels = LabelSet(names, namespace=namespace)
    if feature_sets is None:
        arity = len(catalog[0][1])
        columns: List[List[str]] = [[] for _ in range(arity)]
        namespaces = [feature.namespace for feature in catalog[0][1]]
        for _, features in catalog:
            if len(features) != arity:
                raise ConfigurationError("catalog rows have different feature counts")

            for position, feature in enumerate(features):
                if feature.name not in columns[position]:
                    columns[position].append(feature.name)

        feature_sets = [LabelSet(values, namespace=ns) for values, ns in zip(columns, namespaces)]

    rows = {labels.label(label.name): tuple(features) for label, features in catalog}
    return MappingTable(labels, feature_sets, rows)


def mapping_from_names(rows: Sequence[Tuple[str, Sequence[str]]], columns: Sequence[str], namespace: str = "label",
                       feature_sets: Optional[Sequence[LabelSet]] = None) -> MappingTable:
    """``build_mapping`` from plain names, as read from a catalog file."""
    if feature_sets is None:
        values: List[List[str]] = [[] for _ in columns]
        for _, features in rows:
            if len(features) != len(columns):
                raise ConfigurationError("catalog row has {value} features, header names {key}",
                                         value=len(features), key=len(columns))
            for position, feature in enumerate(features):
                if feature not in values[position]:
                    values[position].append(feature)

        feature_sets = [LabelSet(column_values, namespace=column) for column_values, column in zip(values, columns)]

    names = [name for name, _ in rows]
    _check_unique(names)
    labels = LabelSet(names, namespace=namespace)

    catalog = [
        (labels.label(name), tuple(column.label(value) for column, value in zip(feature_sets, features)))
        for name, features in rows
    ]
    return build_mapping(catalog, feature_sets=feature_sets)


def candidate_vector(features: FeatureTuple, mapping: MappingTable,
                     weighting: Weighting = Weighting.equal) -> CandidateVector:
    if len(features) != mapping.arity:
        raise DimensionMismatchError("feature tuple has arity {value}, catalog has {key}",
                                     value=len(features), key=mapping.arity)

    candidates = mapping.candidates_of(tuple(features))
    bits = tuple(1 if label in candidates else 0 for label in mapping.labels)
    return CandidateVector(bits=bits, weights=_WEIGHTINGS[Weighting(weighting)](bits), unknown=not candidates)


def selectivity(mapping: MappingTable) -> float:
    """Mean candidate-set size over the catalog; 1.0 means every label is uniquely identified."""
    if len(mapping) == 0:
        raise ConfigurationError("selectivity of an empty catalog is undefined")

    sizes = [len(mapping.inverse[features]) for features in mapping.catalog.values()]
    return sum(sizes) / len(sizes)
