from typing import Optional

import numpy as np

from featguard.common.constants import NONSENSE_ID
from featguard.common.errors import ConfigurationError
from featguard.core.labels import Label, LabelSet
from featguard.verifier.space import QuantizedSpace


class _Table:
    def __init__(self, space: QuantizedSpace, labels: LabelSet, table, allow_nonsense: bool):
        self.space = space
        self.labels = labels
        self.table = np.asarray(table, dtype=np.int64).ravel().copy()
        self.table.setflags(write=False)
        if self.table.size != space.size:
            raise ConfigurationError("table has {value} entries but the space has {key} points",
                                     value=self.table.size, key=space.size)

        low = NONSENSE_ID if allow_nonsense else 0
        if self.table.size and (self.table.min() < low or self.table.max() >= len(labels)):
            raise ConfigurationError("table holds label ids outside its label set")

    def code(self, x) -> int:
        return int(self.table[self.space.index_of(x)])


class TableClassifier(_Table):
    """Lookup-table classifier over a finite quantized domain."""

    def __init__(self, space: QuantizedSpace, labels: LabelSet, table):
        super().__init__(space, labels, table, allow_nonsense=False)

    def __call__(self, x) -> Label:
        return self.labels[self.code(x)]


class TableOracle(_Table):
    """Ground-truth lookup table; ``NONSENSE_ID`` entries mark nonsense inputs."""

    def __init__(self, space: QuantizedSpace, labels: LabelSet, table):
        super().__init__(space, labels, table, allow_nonsense=True)

    def __call__(self, x) -> Optional[Label]:
        return self.labels.decode(self.code(x))


def tabulate(f, space: QuantizedSpace) -> np.ndarray:
    """Label codes of f at every grid point, in flat-index order.

    Oracles may return ``None``, encoded as ``NONSENSE_ID``.
    """
    table = getattr(f, "table", None)
    if table is not None and space.same_grid(getattr(f, "space", None)):
        return table

    tabulated = getattr(f, "tabulate", None)
    if tabulated is not None:
        return tabulated(space)

    return np.fromiter((f.labels.id_of(f(point)) for point in space.points()), dtype=np.int64, count=space.size)
