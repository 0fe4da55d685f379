import json
import math
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from diskpattern.geometry import Geometry
from diskpattern.solver import HOROCYCLIC
from diskpattern.specfile import (NAMED_ANGLES, SpecParseError, SpecValidationError, load_spec, parse_angle,
                                  parse_spec, serialize_spec)

SPECS = Path(__file__).resolve().parent.parent / "specs"

TRIANGLE = {"format": 1, "vertices": [0, 1, 2], "faces": [[0, 1, 2]], "theta": [[0, 1, 0], [0, 2, 0], [1, 2, 0]]}


def with_(base, **kw):
    d = json.loads(json.dumps(base))
    d.update(kw)
    return d


def test_hex_generator():
    spec = parse_spec(b'{"format": 1, "generator": {"name": "hex", "depth": 3}}')
    assert len(spec.triangulation.vertices) == 37
    assert set(spec.angles.theta.values()) == {0.0}
    assert spec.geometry is Geometry.EUCLIDEAN
    assert set(spec.boundary.values()) == {1.0}
    assert spec.v0 == 0


def test_explicit_triangle():
    spec = parse_spec(json.dumps(TRIANGLE))
    assert spec.triangulation.vertices == (0, 1, 2)
    assert len(spec.boundary) == 3


def test_angle_above_right_angle_rejected():
    bad = with_(TRIANGLE, theta=[[0, 1, 1.7], [0, 2, 0], [1, 2, 0]])
    with pytest.raises(SpecValidationError):
        parse_spec(bad)
    with pytest.raises(SpecValidationError):
        parse_angle(-0.1, "x")


def test_named_angles():
    for name, val in NAMED_ANGLES.items():
        assert parse_angle(name, "x") == val
    with pytest.raises(SpecParseError):
        parse_angle("pi", "x")
    with pytest.raises(SpecParseError):
        parse_angle(True, "x")


def test_unknown_fields_rejected():
    with pytest.raises(SpecParseError, match="unknown field"):
        parse_spec(with_(TRIANGLE, colour="red"))
    with pytest.raises(SpecParseError, match="generator"):
        parse_spec({"generator": {"name": "hex", "depth": 2, "size": 3}})
    with pytest.raises(SpecParseError):
        parse_spec(with_(TRIANGLE, theta=[{"edge": [0, 1], "angle": 0, "weight": 2}]))


def test_json_error_reports_line():
    with pytest.raises(SpecParseError) as info:
        parse_spec(b'{"format": 1,\n "faces": [[0, 1, 2]\n}')
    assert "line" in str(info.value) and info.value.where.startswith("line")


def test_parse_errors():
    cases = [b"[1, 2]", b'{"format": 2, "faces": [[0,1,2]]}', b'{"faces": []}', b'{"faces": [[0, 1]]}',
             b'{"generator": {"name": "hex", "depth": 0}}', b'{"generator": {"name": "penrose", "depth": 2}}',
             b'{"geometry": "spherical", "faces": [[0,1,2]]}', b"\xff\xfe"]
    for raw in cases:
        with pytest.raises(SpecParseError):
            parse_spec(raw)


def test_validation_errors():
    with pytest.raises(SpecValidationError):
        parse_spec(with_(TRIANGLE, theta=[[0, 1, 0]]))  # missing angles
    with pytest.raises(SpecValidationError):
        parse_spec(with_(TRIANGLE, vertices=[0, 1, 2, 3]))
    with pytest.raises(SpecValidationError):
        parse_spec(with_(TRIANGLE, theta=[[0, 1, 0], [0, 2, 0], [1, 2, 0], [0, 3, 0]]))
    with pytest.raises(SpecValidationError):
        parse_spec(with_(TRIANGLE, boundary={"0": -1.0}))
    with pytest.raises(SpecValidationError):
        parse_spec(with_(TRIANGLE, boundary={"0": HOROCYCLIC}))
    # Inconsistent orientation is forwarded with the pattern-graph report.
    with pytest.raises(SpecValidationError) as info:
        parse_spec({"faces": [[0, 1, 2], [0, 1, 3]], "default_theta": 0})
    assert info.value.report is not None and not info.value.report.passed


def test_condition_failure_forwarded():
    obj = {"faces": [[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]],
           "theta": [[1, 2, "pi/2"], [2, 3, "pi/2"], [3, 4, "pi/2"], [1, 4, "pi/2"]], "default_theta": 0}
    with pytest.raises(SpecValidationError) as info:
        parse_spec(obj)
    assert any(e["kind"] == "C2" for e in info.value.report.errors)


def test_hyperbolic_default_horocyclic():
    spec = load_spec(SPECS / "wheel.json")
    assert spec.geometry is Geometry.HYPERBOLIC
    assert set(spec.boundary.values()) == {HOROCYCLIC}
    assert spec.v0 == 0


def test_perturbed_generator():
    spec = parse_spec({"generator": {"name": "hex", "depth": 2, "max_angle": 1.0, "seed": 7}})
    vals = set(spec.angles.theta.values())
    assert len(vals) > 5 and max(vals) <= 1.0


@pytest.mark.parametrize("name", ["hex3.json", "hex5.json", "square4.json", "degree7.json", "wheel.json"])
def test_shipped_specs_parse_and_round_trip(name):
    spec = load_spec(SPECS / name)
    again = parse_spec(serialize_spec(spec))
    assert again.triangulation == spec.triangulation
    assert again.angles.theta == spec.angles.theta
    assert again.boundary == spec.boundary
    assert again.geometry is spec.geometry
    assert again.v0 == spec.v0


@given(st.lists(st.floats(0, math.pi / 2), min_size=3, max_size=3),
       st.lists(st.floats(0.01, 100), min_size=3, max_size=3))
def test_round_trip_exact(angles, radii):
    obj = with_(TRIANGLE, theta=[[0, 1, angles[0]], [0, 2, angles[1]], [1, 2, angles[2]]],
                boundary={str(k): r for k, r in enumerate(radii)})
    spec = parse_spec(obj)
    again = parse_spec(serialize_spec(spec).encode())
    assert again.angles.theta == spec.angles.theta
    assert again.boundary == spec.boundary


def test_serialized_uses_named_angles():
    spec = load_spec(SPECS / "square4.json")
    text = serialize_spec(spec)
    assert '"pi/2"' in text and '"0"' in text
