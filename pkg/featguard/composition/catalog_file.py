"""Plain-text catalog files.

One header row naming the output label column and the feature columns, then one row per label::

    # color: Red, Yellow, Blue, White
    # shape: Octagon, Diamond, Square, Triangle, Circle, Rectangle
    sign,color,shape
    Stop,Red,Octagon

The optional ``# column: ...`` lines fix each feature column's label order; without them the order of first
appearance is used. Cells follow CSV quoting, so names may hold commas or quotes.
"""
import csv
import io
import pathlib
from typing import Dict, List, Tuple, Union

from featguard.common.errors import ConfigurationError
from featguard.composition.mapping import MappingTable, mapping_from_names
from featguard.core.labels import LabelSet


def _check(cells):
    for cell in cells:
        if not cell or cell != cell.strip() or "\n" in cell or "\r" in cell:
            raise ConfigurationError("catalog name {value} is empty, padded or spans lines", value=repr(cell))


def _write_row(buffer: io.StringIO, cells):
    _check(cells)
    if cells[0].startswith("#"):
        raise ConfigurationError("catalog name {value} would read back as a comment", value=cells[0])
    csv.writer(buffer, lineterminator="\n").writerow(cells)


def dumps_catalog(mapping: MappingTable) -> str:
    buffer = io.StringIO()
    for feature_set in mapping.feature_sets:
        _check(feature_set.names)
        buffer.write(f"# {feature_set.namespace}: ")
        csv.writer(buffer, lineterminator="\n").writerow(feature_set.names)

    _write_row(buffer, [mapping.labels.namespace, *mapping.columns])
    for label, features in mapping.catalog.items():
        _write_row(buffer, [label.name, *(feature.name for feature in features)])

    return buffer.getvalue()


def _cells(text: str) -> List[str]:
    return [cell.strip() for cell in next(csv.reader([text], skipinitialspace=True), [])]


def loads_catalog(text: str, source: str = "<catalog>") -> MappingTable:
    vocabularies: Dict[str, List[str]] = {}
    rows: List[Tuple[str, List[str]]] = []
    header: List[str] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue

        if stripped.startswith("#"):
            column, sep, values = stripped[1:].partition(":")
            if sep:
                vocabularies[column.strip()] = [value for value in _cells(values) if value]
            continue

        cells = _cells(stripped)
        if not header:
            header = cells
            if len(header) < 1:
                raise ConfigurationError("{path}:{value}: header row is empty", path=source, value=line_number)
            continue

        if len(cells) != len(header):
            raise ConfigurationError("{path}:{value}: expected {key} cells, found {label}", path=source,
                                     value=line_number, key=len(header), label=len(cells))
        rows.append((cells[0], cells[1:]))

    if not header:
        raise ConfigurationError("{path}: catalog has no header row", path=source)

    namespace, columns = header[0], header[1:]
    feature_sets = None
    if all(column in vocabularies for column in columns):
        feature_sets = [LabelSet(vocabularies[column], namespace=column) for column in columns]

    return mapping_from_names(rows, columns, namespace=namespace, feature_sets=feature_sets)


def save_catalog(mapping: MappingTable, path: Union[str, pathlib.Path]):
    pathlib.Path(path).write_text(dumps_catalog(mapping))


def load_catalog(path: Union[str, pathlib.Path]) -> MappingTable:
    path = pathlib.Path(path)
    if not path.exists():
        raise ConfigurationError("catalog file {path} doesn't exist!", path=path)
    return loads_catalog(path.read_text(), source=str(path))
