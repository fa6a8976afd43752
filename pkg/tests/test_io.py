import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperlimits.errors import ValidationError
from hyperlimits.generators import random_hypergraphon, random_partition, random_signed
from hyperlimits.hypergraph import make_hypergraph, named_hypergraph, write_hg
from hyperlimits.io import (dumps, function_doc, function_from_doc, hypergraph_from_spec,
                            load_json, partition_doc, partition_from_doc, quotient_doc,
                            quotient_from_doc, read_hypergraphon, read_partition, read_quotient,
                            save_json)
from hyperlimits.step import (StepFunction, co_refine, functions_equal, partitions_equal,
                              quotient, uniform_intervals)

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 3))
def test_round_trips_are_bit_exact(seed, level):
    rng = np.random.default_rng(seed)
    P = random_partition(rng, level, [int(rng.integers(1, 4)) for _ in range(level)])
    text = dumps(partition_doc(P))
    assert partitions_equal(partition_from_doc(json.loads(text)), P)
    W = random_hypergraphon(rng, P)
    assert functions_equal(function_from_doc(json.loads(dumps(function_doc(W)))), W)
    D = random_signed(rng, P)
    back = function_from_doc(json.loads(dumps(function_doc(D))), cls=StepFunction)
    assert functions_equal(back, D)


def test_labeled_partition_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    C, _, _ = co_refine(random_partition(rng, 2, 2), random_partition(rng, 2, 2))
    C = C.relabel(C.labels // 2, 2)
    doc = partition_doc(C)
    assert "labels" in doc
    save_json(doc, tmp_path / "c.json")
    assert partitions_equal(read_partition(tmp_path / "c.json"), C)
    L = uniform_intervals(3).relabel([0, 1, 0], 2)
    assert partitions_equal(partition_from_doc(json.loads(dumps(partition_doc(L)))), L)


def test_files(tmp_path):
    rng = np.random.default_rng(2)
    W = random_hypergraphon(rng, random_partition(rng, 2, 2))
    save_json(function_doc(W), tmp_path / "w.json")
    assert functions_equal(read_hypergraphon(tmp_path / "w.json"), W)
    Qt = quotient(W, random_partition(rng, 2, 2))
    save_json(quotient_doc(Qt), tmp_path / "q.json")
    back = read_quotient(tmp_path / "q.json")
    assert np.array_equal(back.volume, Qt.volume) and np.array_equal(back.average, Qt.average)
    assert quotient_from_doc(quotient_doc(Qt)).q == Qt.q


def test_level_one_value_doc():
    doc = {"level": 1, "value": 0.25}
    assert float(function_from_doc(doc).values) == 0.25
    assert function_doc(function_from_doc(doc)) == doc


def _base_doc():
    return {"intervals": [0.5, 0.5]}


@pytest.mark.parametrize("doc", [
    {"level": 2, "base": _base_doc(), "values": [{"cell": [0, 0], "value": 0.1},
                                                 {"cell": [0, 1], "value": 0.2}]},
    {"level": 2, "base": _base_doc(), "values": [{"cell": [0, 0], "value": 0.1},
                                                 {"cell": [1, 0], "value": 0.2},
                                                 {"cell": [1, 1], "value": 0.3}]},
    {"level": 2, "base": _base_doc(), "values": [{"cell": [0, 0], "value": 0.1},
                                                 {"cell": [0, 0], "value": 0.1},
                                                 {"cell": [0, 1], "value": 0.2},
                                                 {"cell": [1, 1], "value": 0.3}]},
    {"level": 2, "base": _base_doc(), "values": [{"cell": [0, 0], "value": 1.5},
                                                 {"cell": [0, 1], "value": 0.2},
                                                 {"cell": [1, 1], "value": 0.3}]},
    {"level": 3, "base": _base_doc(), "values": []},
    {"base": _base_doc()},
])
def test_invalid_function_docs(doc):
    with pytest.raises(ValidationError):
        function_from_doc(doc)


@pytest.mark.parametrize("doc", [
    {"intervals": []},
    {"intervals": [0.6, 0.6]},
    {"level": 1},
    {"level": 2, "base": _base_doc(), "parts": 2,
     "splits": [{"cell": [0, 0], "split": [0.5, 0.5]}, {"cell": [0, 1], "split": [1.0]},
                {"cell": [1, 1], "split": [0.5, 0.5]}]},
])
def test_invalid_partition_docs(doc):
    with pytest.raises(ValidationError):
        partition_from_doc(doc)


def test_load_errors(tmp_path):
    with pytest.raises(ValidationError, match="not found"):
        load_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{oops")
    with pytest.raises(ValidationError, match="invalid JSON"):
        load_json(tmp_path / "bad.json")


def test_dumps_is_deterministic_and_strict():
    obj = {"b": [1, 2.5, None], "a": {"x": np.float64(0.1), "y": True}}
    assert dumps(obj) == dumps(obj)
    assert json.loads(dumps(obj)) == {"b": [1, 2.5, None], "a": {"x": 0.1, "y": True}}
    with pytest.raises(ValidationError):
        dumps([float("nan")])
    with pytest.raises(TypeError):
        dumps(object())


def test_hypergraph_specs(tmp_path):
    assert hypergraph_from_spec("K4_3")[1] == named_hypergraph("K4_3")
    H = make_hypergraph(3, 5, [(0, 1, 2)])
    write_hg(H, tmp_path / "mine.hg")
    name, got = hypergraph_from_spec("mine.hg", tmp_path)
    assert name == "mine" and got == H
    name, got = hypergraph_from_spec({"k": 2, "n": 3, "edges": [[0, 1]], "name": "e"})
    assert name == "e" and got == make_hypergraph(2, 3, [(0, 1)])
    with pytest.raises(ValidationError):
        hypergraph_from_spec("nothing-here")
    with pytest.raises(ValidationError):
        hypergraph_from_spec(7)
