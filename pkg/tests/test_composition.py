import numpy as np
import pytest

from featguard.common.constants import NONSENSE_ID
from featguard.common.errors import ConfigurationError, DimensionMismatchError, UnknownTupleError
from featguard.composition.catalog_file import dumps_catalog, loads_catalog
from featguard.composition.compose import (LabelTable, MappingClassifier, compose_oracles, parallel_compose,
                                           serial_compose)
from featguard.composition.mapping import build_mapping, candidate_vector, mapping_from_names, selectivity
from featguard.core.labels import LabelSet
from featguard.core.table import TableClassifier, TableOracle, tabulate
from featguard.signs import default_catalog
from featguard.verifier.space import QuantizedSpace


@pytest.fixture()
def catalog():
    return default_catalog()


@pytest.fixture()
def space():
    return QuantizedSpace.grid(1, 0, 2, 1)


@pytest.fixture()
def colors():
    return LabelSet(["Red", "Yellow", "Blue"], namespace="color")


@pytest.fixture()
def shapes():
    return LabelSet(["Octagon", "Diamond"], namespace="shape")


@pytest.fixture()
def signs():
    return LabelSet(["Stop", "Warning", "Info"], namespace="sign")


def _bits(catalog, color, shape):
    return candidate_vector(catalog.mapping.tuple_for([color, shape]), catalog.mapping).bits


def test_catalog_rows(catalog):
    color, shape = catalog.mapping.catalog[catalog.labels.label("Stop")]
    assert (color.name, shape.name) == ("Red", "Octagon")


def test_inverse_of_shared_tuple(catalog):
    candidates = catalog.mapping.candidates_of(catalog.mapping.tuple_for(["Yellow", "Diamond"]))
    assert {label.name for label in candidates} == {"Left Turn Ahead", "Right Turn Ahead"}


def test_inverse_of_unique_tuple(catalog):
    candidates = catalog.mapping.candidates_of(catalog.mapping.tuple_for(["Red", "Octagon"]))
    assert {label.name for label in candidates} == {"Stop"}


@pytest.mark.parametrize("color, shape, expected", [
    ("Red", "Octagon", (1, 0, 0, 0, 0, 0, 0, 0, 0)),
    ("Yellow", "Diamond", (0, 0, 0, 1, 1, 0, 0, 0, 0)),
    ("Blue", "Square", (0, 0, 0, 0, 0, 0, 0, 0, 1)),
])
def test_candidate_vectors(catalog, color, shape, expected):
    assert _bits(catalog, color, shape) == expected


def test_candidate_vector_string(catalog):
    vector = candidate_vector(catalog.mapping.tuple_for(["Red", "Octagon"]), catalog.mapping)
    assert str(vector) == "<1,0,0,0,0,0,0,0,0>"


def test_candidate_vector_equal_weights(catalog):
    vector = candidate_vector(catalog.mapping.tuple_for(["Yellow", "Diamond"]), catalog.mapping)
    assert vector.weights[3] == vector.weights[4] == 0.5
    assert sum(vector.weights) == pytest.approx(1.0)


def test_unknown_tuple_is_all_zero(catalog):
    vector = candidate_vector(catalog.mapping.tuple_for(["Blue", "Octagon"]), catalog.mapping)
    assert vector.unknown
    assert vector.count == 0


def test_candidate_vector_arity(catalog):
    with pytest.raises(DimensionMismatchError):
        candidate_vector(catalog.mapping.tuple_for(["Red", "Octagon"])[:1], catalog.mapping)


def test_selectivity_of_sign_catalog(catalog):
    assert selectivity(catalog.mapping) == pytest.approx(13 / 9)


def test_color_only_selectivity_is_larger(catalog):
    assert selectivity(catalog.color_only()) == pytest.approx(23 / 9)
    assert selectivity(catalog.color_only()) > selectivity(catalog.mapping)


def test_selectivity_of_unique_catalog():
    mapping = mapping_from_names([("a", ["x"]), ("b", ["y"])], ["feature"])
    assert selectivity(mapping) == 1.0


def test_selectivity_of_empty_catalog():
    with pytest.raises(ConfigurationError):
        selectivity(build_mapping([]))


def test_empty_catalog():
    assert len(build_mapping([])) == 0


def test_duplicate_labels_rejected():
    with pytest.raises(ConfigurationError):
        mapping_from_names([("a", ["x"]), ("a", ["y"])], ["feature"])


def test_every_label_is_its_own_candidate(catalog):
    for label, features in catalog.mapping.catalog.items():
        assert label in catalog.mapping.candidates_of(features)


def test_catalog_text_round_trip(catalog):
    text = dumps_catalog(catalog.mapping)
    assert text.splitlines()[2] == "sign,color,shape"
    assert text.splitlines()[3] == "Stop,Red,Octagon"
    assert loads_catalog(text) == catalog.mapping


def test_hand_written_catalog_with_spaces():
    mapping = loads_catalog("sign, color, shape\nStop, Red, Octagon\n")
    assert [label.name for label in mapping.labels] == ["Stop"]


@pytest.mark.parametrize("name", ['"Stop"', "Speed, 45", 'Say "yield", then go', "Left # Turn"])
def test_catalog_round_trip_of_quoted_names(name):
    mapping = mapping_from_names([(name, ["Red", name]), ("Plain", ["Blue", "Square"])], ["color", "shape"],
                                 namespace="sign")
    assert loads_catalog(dumps_catalog(mapping)) == mapping


@pytest.mark.parametrize("name", ["# Stop", " Stop", "Stop\nYield"])
def test_catalog_refuses_names_it_can_not_read_back(name):
    mapping = mapping_from_names([(name, ["Red", "Octagon"])], ["color", "shape"], namespace="sign")
    with pytest.raises(ConfigurationError):
        dumps_catalog(mapping)


def test_catalog_text_errors():
    with pytest.raises(ConfigurationError, match="<catalog>:3"):
        loads_catalog("sign, color\nStop, Red\nYield, Red, Triangle\n")


def test_serial_compose_constant(space, colors, signs):
    f = TableClassifier(space, colors, [1, 1, 1])
    g = LabelTable([colors], signs, [0, 1, 2])
    composed = serial_compose(f, g)
    assert {composed([x]).name for x in range(3)} == {"Warning"}


def test_serial_compose_pointwise(space, colors, signs):
    f = TableClassifier(space, colors, [0, 2, 1])
    g = LabelTable([colors], signs, [0, 1, 2])
    composed = serial_compose(f, g)
    assert [composed([x]).name for x in range(3)] == ["Stop", "Info", "Warning"]
    assert tabulate(composed, space).tolist() == [0, 2, 1]


def test_parallel_of_one_is_serial(space, colors, signs):
    f = TableClassifier(space, colors, [0, 2, 1])
    g = LabelTable([colors], signs, [2, 0, 1])
    assert tabulate(parallel_compose([f], g), space).tolist() == tabulate(serial_compose(f, g), space).tolist()


def test_parallel_compose_is_symmetric(space, colors, shapes):
    f1 = TableClassifier(space, colors, [0, 1, 2])
    f2 = TableClassifier(space, shapes, [1, 0, 1])
    outputs = LabelSet([f"z{i}" for i in range(6)], namespace="out")
    table = np.arange(6).reshape(3, 2)
    forward = parallel_compose([f1, f2], LabelTable([colors, shapes], outputs, table))
    backward = parallel_compose([f2, f1], LabelTable([shapes, colors], outputs, table.T))
    assert [forward([x]) for x in range(3)] == [backward([x]) for x in range(3)]


def test_parallel_compose_rejects_mismatched_arity(space, colors, shapes, signs):
    f1 = TableClassifier(space, colors, [0, 1, 2])
    with pytest.raises(ConfigurationError):
        parallel_compose([f1], LabelTable([colors, shapes], signs, np.zeros((3, 2))))


def test_parallel_compose_rejects_shared_namespace(space, colors):
    f = TableClassifier(space, colors, [0, 1, 2])
    with pytest.raises(ConfigurationError):
        serial_compose(f, LabelTable([colors], LabelSet(["a", "b", "c"], namespace="color"), [0, 1, 2]))


def test_mapping_classifier_emits_candidates(catalog):
    g = MappingClassifier(catalog.mapping)
    assert g(catalog.mapping.tuple_for(["Yellow", "Diamond"])).count == 2


def test_label_table_unknown_tuple(colors, signs):
    g = LabelTable([colors], signs, [0, NONSENSE_ID, 2])
    assert g.lookup(colors.label("Yellow")) is None
    with pytest.raises(UnknownTupleError):
        g(colors.label("Yellow"))


def test_label_table_injectivity(colors, signs):
    assert LabelTable([colors], signs, [0, 1, 2]).is_injective()
    assert not LabelTable([colors], signs, [0, 0, 2]).is_injective()
    assert LabelTable([colors], signs, [0, NONSENSE_ID, NONSENSE_ID]).is_injective()


def test_label_table_agreement(colors, signs):
    oracle = LabelTable([colors], signs, [0, NONSENSE_ID, 2])
    assert LabelTable([colors], signs, [0, 1, 2]).agrees_with(oracle)
    assert not LabelTable([colors], signs, [1, 1, 2]).agrees_with(oracle)


def test_composed_oracle_propagates_nonsense(space, colors, shapes):
    o1 = TableOracle(space, colors, [0, NONSENSE_ID, 2])
    o2 = TableOracle(space, shapes, [0, 1, 1])
    outputs = LabelSet([f"z{i}" for i in range(6)], namespace="out")
    oracle = compose_oracles([o1, o2], LabelTable([colors, shapes], outputs, np.arange(6).reshape(3, 2)))
    assert oracle([1]) is None
    assert oracle([2]).name == "z5"
    assert tabulate(oracle, space).tolist() == [0, NONSENSE_ID, 5]
