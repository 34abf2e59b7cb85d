import json

import numpy as np
import pytest

from qctmc import io
from qctmc.model import apollonian_gen1, governing_matrix


def test_model_round_trip(tmp_path):
    m, rho = apollonian_gen1()
    path = tmp_path / "apollonian.json"
    io.save_model(path, m, rho)
    m2, rho2 = io.load_model(path)
    assert m2.states == m.states and m2.dim == m.dim
    assert m2.label("3") == m.label("3")
    np.testing.assert_array_equal(governing_matrix(m2), governing_matrix(m))
    np.testing.assert_array_equal(rho2.blocks["3"], rho.blocks["3"])


def test_missing_initial_is_none():
    doc = {"dim": 1, "states": ["a"]}
    assert io.model_from_dict(doc)[1] is None


@pytest.mark.parametrize("doc,field", [
    ([], "JSON object"),
    ({"states": ["a"]}, "dim"),
    ({"dim": 0, "states": ["a"]}, "dim"),
    ({"dim": 1, "states": []}, "states"),
    ({"dim": 1, "states": ["a", "a"]}, "duplicate"),
    ({"dim": 1, "states": ["a"], "jumps": [{"from": "a"}]}, "jumps[0]"),
    ({"dim": 2, "states": ["a"], "hamiltonians": {"a": [[[1, 0]]]}}, "hamiltonians['a']"),
    ({"dim": 1, "states": ["a"], "initial": {"a": [[["x", 0]]]}}, "initial['a']"),
])
def test_malformed_models(doc, field):
    with pytest.raises(io.ModelFileError) as info:
        io.model_from_dict(doc)
    assert field in str(info.value)


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(io.ModelFileError):
        io.load_model(bad)
    with pytest.raises(io.ModelFileError):
        io.load_model(tmp_path / "absent.json")


def test_cylinder(tmp_path):
    path = tmp_path / "cyl.json"
    path.write_text(json.dumps({"start": 3, "steps": [{"interval": [0, 1], "to": 1}]}))
    spec = io.load_cylinder(path)
    assert spec.start == "3" and spec.steps[0].interval == (0.0, 1.0) and spec.steps[0].to == "1"
    with pytest.raises(io.ModelFileError):
        io.cylinder_from_dict({"start": "3", "steps": [{"interval": [0]}]})


def test_matrix_json_round_trip():
    a = np.array([[1 + 2j, -0.5], [0.25j, 3]])
    np.testing.assert_array_equal(io.matrix_from_json(io.matrix_to_json(a), "a", 2), a)
