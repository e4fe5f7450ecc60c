import itertools
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from featguard.common.constants import NONSENSE_ID
from featguard.common.errors import ConfigurationError, DimensionMismatchError, UnknownTupleError
from featguard.composition.mapping import CandidateVector, FeatureTuple, MappingTable, Weighting, candidate_vector
from featguard.core.labels import Label, LabelSet, ensure_disjoint
from featguard.core.space import check_same_space
from featguard.core.table import tabulate


def _as_tuple(features) -> FeatureTuple:
    return (features,) if isinstance(features, Label) else tuple(features)


class LabelTable:
    """Stage-two table over tuples of stage-one label ids.

    ``table`` has one axis per input label set; ``NONSENSE_ID`` marks tuples with no output (an oracle's nonsense,
    or a tuple the classifier cannot map).
    """

    def __init__(self, input_sets: Sequence[LabelSet], labels: LabelSet, table):
        self.input_sets: Tuple[LabelSet, ...] = tuple(input_sets)
        self.labels = labels
        self.table = np.asarray(table, dtype=np.int64).reshape(tuple(len(s) for s in self.input_sets)).copy()
        self.table.setflags(write=False)
        if self.table.size and (self.table.min() < NONSENSE_ID or self.table.max() >= len(labels)):
            raise ConfigurationError("stage-two table holds label ids outside its label set")

    @classmethod
    def from_function(cls, input_sets: Sequence[LabelSet], labels: LabelSet,
                      rule: Callable[[FeatureTuple], Optional[Label]]) -> "LabelTable":
        table = np.full(tuple(len(s) for s in input_sets), NONSENSE_ID, dtype=np.int64)
        for ids in itertools.product(*(range(len(s)) for s in input_sets)):
            features = tuple(s[i] for s, i in zip(input_sets, ids))
            table[ids] = labels.id_of(rule(features))
        return cls(input_sets, labels, table)

    @property
    def arity(self) -> int:
        return len(self.input_sets)

    def lookup(self, features) -> Optional[Label]:
        features = _as_tuple(features)
        if len(features) != self.arity:
            raise DimensionMismatchError("feature tuple has arity {value}, table has {key}",
                                         value=len(features), key=self.arity)
        ids = tuple(s.id_of(feature) for s, feature in zip(self.input_sets, features))
        return self.labels.decode(int(self.table[ids]))

    def __call__(self, features) -> Label:
        label = self.lookup(features)
        if label is None:
            raise UnknownTupleError("no output label for feature tuple {value}",
                                    value=tuple(str(f) for f in _as_tuple(features)))
        return label

    def codes(self, *stage_codes: np.ndarray) -> np.ndarray:
        """Vectorised lookup; any ``NONSENSE_ID`` input yields ``NONSENSE_ID``."""
        stacked = [np.asarray(c, dtype=np.int64) for c in stage_codes]
        undefined = np.zeros(stacked[0].shape, dtype=bool)
        for codes in stacked:
            undefined |= codes == NONSENSE_ID
        safe = tuple(np.where(undefined, 0, codes) for codes in stacked)
        return np.where(undefined, NONSENSE_ID, self.table[safe])

    def is_injective(self) -> bool:
        defined = self.table[self.table != NONSENSE_ID]
        return np.unique(defined).size == defined.size

    def agrees_with(self, oracle: "LabelTable") -> bool:
        """Equal to ``oracle`` on every tuple the oracle labels."""
        defined = oracle.table != NONSENSE_ID
        return bool(np.array_equal(self.table[defined], oracle.table[defined]))


class MappingClassifier:
    """Stage-two classifier G realised by a mapping table: feature tuple to candidate vector."""

    def __init__(self, mapping: MappingTable, weighting: Weighting = Weighting.equal):
        self.mapping = mapping
        self.weighting = weighting
        self.input_sets = mapping.feature_sets
        self.labels = mapping.labels

    @property
    def arity(self) -> int:
        return self.mapping.arity

    def __call__(self, features) -> CandidateVector:
        return candidate_vector(_as_tuple(features), self.mapping, self.weighting)


StageTwo = Union[LabelTable, MappingClassifier]


class ComposedClassifier:
    """G(<F_1(x), ..., F_n(x)>): the stage-two classifier sees nothing but the stage-one outputs."""

    def __init__(self, stage_one: Sequence, stage_two: StageTwo):
        self.stage_one = tuple(stage_one)
        self.stage_two = stage_two
        self.space = self.stage_one[0].space
        self.labels = stage_two.labels

    @property
    def arity(self) -> int:
        return len(self.stage_one)

    def features(self, x) -> FeatureTuple:
        return tuple(f(x) for f in self.stage_one)

    def __call__(self, x):
        return self.stage_two(self.features(x))

    def tabulate(self, space) -> np.ndarray:
        if not isinstance(self.stage_two, LabelTable):
            raise ConfigurationError("only label-valued compositions can be tabulated")

        codes = self.stage_two.codes(*(tabulate(f, space) for f in self.stage_one))
        if np.any(codes == NONSENSE_ID):
            raise UnknownTupleError("composition is not total: some stage-one tuple has no output label")
        return codes


class ComposedOracle:
    """O_R(x) = O_G(O_F1(x), ..., O_Fn(x)); nonsense anywhere upstream stays nonsense."""

    def __init__(self, oracles: Sequence, stage_two: LabelTable):
        self.oracles = tuple(oracles)
        self.stage_two = stage_two
        self.space = self.oracles[0].space
        self.labels = stage_two.labels

    def __call__(self, x) -> Optional[Label]:
        truths = tuple(o(x) for o in self.oracles)
        if any(truth is None for truth in truths):
            return None
        return self.stage_two.lookup(truths)

    def tabulate(self, space) -> np.ndarray:
        return self.stage_two.codes(*(tabulate(o, space) for o in self.oracles))


def _check_stage_two(stage_one: Sequence, g):
    if g.arity != len(stage_one):
        raise ConfigurationError("stage-two classifier takes {value} features but {key} extractors were given",
                                 value=g.arity, key=len(stage_one))

    for position, (f, expected) in enumerate(zip(stage_one, g.input_sets)):
        if f.labels.namespace != expected.namespace or not set(expected.names) <= set(f.labels.names):
            raise ConfigurationError("feature {value} of the stage-two classifier does not match extractor labels "
                                     "{key}", value=position, key=f.labels)

    ensure_disjoint([f.labels for f in stage_one], g.labels)


def parallel_compose(fs: Sequence, g: StageTwo) -> ComposedClassifier:
    if not fs:
        raise ConfigurationError("parallel composition needs at least one extractor")

    check_same_space([f.space for f in fs])
    _check_stage_two(fs, g)
    return ComposedClassifier(fs, g)


def serial_compose(f, g: StageTwo) -> ComposedClassifier:
    return parallel_compose([f], g)


def compose_oracles(oracles: Sequence, o_g: LabelTable) -> ComposedOracle:
    check_same_space([o.space for o in oracles])
    _check_stage_two(oracles, o_g)
    return ComposedOracle(oracles, o_g)
