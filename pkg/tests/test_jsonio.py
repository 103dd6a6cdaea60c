import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from equalflow import jsonio
from equalflow.generate import random_instance, random_scenario
from equalflow.jsonio import SchemaError


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), st.booleans())
def test_instance_round_trip(seed, with_cost):
    rng = random.Random(seed)
    inst = random_instance(rng, (rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 3)),
                           0.4, 0.2, with_cost=with_cost)
    text = jsonio.dumps(jsonio.instance_to_json(inst))
    again = jsonio.instance_from_json(json.loads(text))
    assert again == inst
    assert jsonio.dumps(jsonio.instance_to_json(again)) == text


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32), st.booleans())
def test_scenario_round_trip(seed, roster):
    sc = random_scenario(random.Random(seed), roster=roster)
    assert jsonio.scenario_from_json(jsonio.scenario_to_json(sc)) == sc


@pytest.mark.parametrize("doc, pointer", [
    ({"dims": [1, 1], "row_supply": [[1]], "col_demand": [[1]]}, "/dims"),
    ({"dims": [1, 1, 1], "row_supply": [["x"]], "col_demand": [[1]]}, "/row_supply/0/0"),
    ({"dims": [1, 1, 1], "row_supply": [[1]], "col_demand": [[1]], "row_rel": "<"}, "/row_rel"),
    ({"dims": [1, 1, 1], "row_supply": [[1]], "col_demand": [[1]],
      "classes": [{"id": "t", "members": [[0, 0]]}]}, "/classes/0/members/0"),
    ({"dims": [1, 1, 1], "row_supply": [[1]], "col_demand": [[1]],
      "cost": {"linear": [1, 2]}}, "/cost/linear"),
])
def test_instance_schema_errors_carry_a_pointer(doc, pointer):
    with pytest.raises(SchemaError) as info:
        jsonio.instance_from_json(doc)
    assert info.value.pointer == pointer


def test_missing_field_points_at_the_root():
    with pytest.raises(SchemaError) as info:
        jsonio.instance_from_json({"dims": [1, 1, 1]})
    assert info.value.pointer == "" and "row_supply" in str(info.value)


def test_system_parsing_adds_bound_rows():
    doc = {"constraints": [{"coeffs": {"x": 1, "y": "1/2"}, "rel": "<=", "rhs": "3/2"}],
           "bounds": {"x": [0, 1], "y": [0, None]}}
    system, bounds = jsonio.system_from_json(doc)
    assert system.variables == ("x", "y")
    assert bounds == {"x": (0, 1), "y": (0, None)}
    assert len(system.inputs) == 4
    assert system.inputs[0].coeffs == {"x": 1, "y": Fraction(1, 2)}


def test_system_rhs_must_be_numeric():
    doc = {"constraints": [{"coeffs": {"x": 1}, "rel": "<=", "rhs": "one"}]}
    with pytest.raises(SchemaError) as info:
        jsonio.system_from_json(doc)
    assert info.value.pointer == "/constraints/0/rhs"


def test_detect_document_kind():
    assert jsonio.detect({"constraints": []}) == "system"
    assert jsonio.detect({"requests": []}) == "scenario"
    assert jsonio.detect({"dims": [1, 1, 1]}) == "instance"


def test_fraction_text():
    assert jsonio.fraction_str(Fraction(-3, 4)) == "-3/4"
    assert jsonio.fraction_str(Fraction(6, 3)) == "2"
