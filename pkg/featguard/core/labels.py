from typing import Iterator, Optional, Sequence, Tuple

import pydantic
from pydantic import BaseModel, BaseConfig, validator

from featguard.common.constants import NONSENSE_ID
from featguard.common.errors import ConfigurationError


class Label(BaseModel):
    """A member of a label set.

    Equality and hashing go by ``(namespace, name)``; ``id`` is the position inside the owning set.
    """
    id: int
    name: str
    namespace: str = ""

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_mutation = False

    @validator("id")
    def _non_negative(cls, value):
        if value < 0:
            raise ValueError("label id must be non-negative")
        return value

    def __hash__(self):
        return hash((self.namespace, self.name))

    def __eq__(self, other):
        if not isinstance(other, Label):
            return NotImplemented
        return (self.namespace, self.name) == (other.namespace, other.name)

    def __str__(self):
        return self.name


class LabelSet:
    """Ordered, duplicate-free set of labels under one namespace.

    NONSENSE is never a member; tables encode it as ``NONSENSE_ID``.
    """

    def __init__(self, names: Sequence[str], namespace: str = ""):
        if len(set(names)) != len(names):
            raise ConfigurationError("label set {key} has duplicate labels", key=namespace or "<anonymous>")

        self.namespace = namespace
        self._labels: Tuple[Label, ...] = tuple(
            Label(id=i, name=name, namespace=namespace) for i, name in enumerate(names)
        )
        self._by_name = {label.name: label for label in self._labels}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(label.name for label in self._labels)

    def __len__(self):
        return len(self._labels)

    def __iter__(self) -> Iterator[Label]:
        return iter(self._labels)

    def __getitem__(self, label_id: int) -> Label:
        if label_id < 0:
            raise IndexError(label_id)
        return self._labels[label_id]

    def __contains__(self, item) -> bool:
        if isinstance(item, Label):
            return item.namespace == self.namespace and item.name in self._by_name
        return item in self._by_name

    def __eq__(self, other):
        if not isinstance(other, LabelSet):
            return NotImplemented
        return self.namespace == other.namespace and self.names == other.names

    def __hash__(self):
        return hash((self.namespace, self.names))

    def __repr__(self):
        return f"LabelSet({list(self.names)!r}, namespace={self.namespace!r})"

    def label(self, name: str) -> Label:
        try:
            return self._by_name[name]

        except KeyError:
            raise ConfigurationError("label {label} is not in label set {key}", label=name,
                                     key=self.namespace or "<anonymous>")

    def id_of(self, label: Optional[Label]) -> int:
        """Table code of a label, NONSENSE_ID for ``None``."""
        if label is None:
            return NONSENSE_ID
        return self.label(label.name).id

    def decode(self, label_id: int) -> Optional[Label]:
        if label_id == NONSENSE_ID:
            return None
        return self._labels[label_id]

    def same_members(self, other: "LabelSet") -> bool:
        return self.namespace == other.namespace and set(self.names) == set(other.names)


def ensure_disjoint(stage_one: Sequence[LabelSet], output: LabelSet):
    """The output label set must not share labels with any stage-one set; namespaces keep them apart."""
    for label_set in stage_one:
        if label_set.namespace == output.namespace:
            raise ConfigurationError("stage-one and stage-two label sets share the namespace {key}",
                                     key=output.namespace or "<anonymous>")
