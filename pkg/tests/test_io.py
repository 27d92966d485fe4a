import json

import numpy as np
import pytest

from qsfe.attack import canonical_protocol, check_correctness, extraction_attack, precomputed_ot
from qsfe.functions import builtin
from qsfe.io import (
    SchemaError,
    decode_complex,
    dumps,
    encode_complex,
    function_from_json,
    function_to_json,
    measurement_from_json,
    measurement_to_json,
    protocol_from_json,
    protocol_to_json,
    rows_to_csv,
    state_from_json,
    state_to_json,
)
from qsfe.qstate import DensityOperator, Measurement, RegisterLayout, random_density, random_pure_state


def _via_text(obj):
    return json.loads(dumps(obj))


def test_complex_round_trip(rng):
    a = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    assert np.array_equal(decode_complex(_via_text(encode_complex(a))), a)
    with pytest.raises(SchemaError):
        decode_complex([1.0, 2.0, 3.0])


def test_state_round_trip(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 3))
    psi = random_pure_state(lay, rng)
    back = state_from_json(_via_text(state_to_json(psi)))
    assert back.layout == lay and np.array_equal(back.amplitudes, psi.amplitudes)
    rho = random_density(lay, rng)
    back = state_from_json(_via_text(state_to_json(rho)))
    assert isinstance(back, DensityOperator) and np.array_equal(back.matrix, rho.matrix)


def test_state_schema_errors():
    with pytest.raises(SchemaError):
        state_from_json({"amp": [[1, 0]]})
    with pytest.raises(SchemaError):
        state_from_json({"layout": [["A", 1]]})
    with pytest.raises(SchemaError):
        state_from_json({"layout": [["A", "two"]], "amp": [[1, 0]]})


def test_function_round_trip():
    f = builtin("eq_restricted", n=4, k=2)
    g = function_from_json(_via_text(function_to_json(f)))
    assert g.x_alphabet == f.x_alphabet and np.array_equal(g.table, f.table)
    assert function_from_json("ot(2,1)").shape == (4, 2)
    with pytest.raises(SchemaError):
        function_from_json("nope(3)")
    with pytest.raises(SchemaError):
        function_from_json({"x": ["a"], "y": ["b"], "z": ["0"], "t": [[4]]})
    with pytest.raises(SchemaError):
        function_from_json({"x": ["a"]})


def test_measurement_forms():
    m = Measurement.computational("B", 2)
    back = measurement_from_json(_via_text(measurement_to_json(m)), ("X",))
    assert back.registers == ("B",)
    bare = measurement_from_json(_via_text(measurement_to_json(m))["outcomes"], ("B",))
    assert [z for z, _ in bare.outcomes] == ["0", "1"]
    with pytest.raises(SchemaError):
        measurement_from_json([{"z": "0", "kraus": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]}], ("B",))


@pytest.mark.parametrize("make", [lambda: canonical_protocol(builtin("ot", n=2, k=1), 0.01),
                                  lambda: precomputed_ot(2, 1)[0]])
def test_protocol_round_trip(make):
    p = make()
    text = dumps(protocol_to_json(p))
    q = protocol_from_json(json.loads(text))
    assert dumps(protocol_to_json(q)) == text
    assert check_correctness(q) == check_correctness(p)
    assert extraction_attack(q).joint_success == pytest.approx(extraction_attack(p).joint_success, abs=1e-12)


def test_protocol_schema_errors():
    obj = protocol_to_json(canonical_protocol(builtin("ot", n=2, k=1)))
    bad = json.loads(json.dumps(obj))
    bad["branches"]["(0,0)0"] = bad["branches"].pop("(0,0)|0")
    with pytest.raises(SchemaError):
        protocol_from_json(bad)
    bad = json.loads(json.dumps(obj))
    del bad["branches"]["(0,0)|0"]
    with pytest.raises(SchemaError):
        protocol_from_json(bad)
    bad = json.loads(json.dumps(obj))
    del bad["layout"]
    with pytest.raises(SchemaError):
        protocol_from_json(bad)


def test_dumps_deterministic():
    assert dumps({"b": 1, "a": [1.5, None]}) == dumps({"a": [1.5, None], "b": 1})


def test_rows_to_csv():
    text = rows_to_csv([{"a": 1, "b": {"c": 2}}, {"a": 3, "b": {"c": 4}, "d": [1, 2]}])
    lines = text.splitlines()
    assert lines[0] == "a,b.c,d"
    assert lines[2] == '3,4,"[1, 2]"'
