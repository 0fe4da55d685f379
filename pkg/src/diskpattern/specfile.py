"""JSON pattern files: parsing, validation and serialization.

A file either names a generator::

    {"format": 1, "generator": {"name": "hex", "depth": 3}}

or lists the complex explicitly::

    {"format": 1, "geometry": "euclidean",
     "vertices": [0, 1, 2], "faces": [[0, 1, 2]],
     "theta": [{"edge": [0, 1], "angle": "pi/2"}, [1, 2, 0.0]],
     "default_theta": 0,
     "boundary": {"0": 1.0, "1": "horocyclic"}, "boundary_default": 1.0}
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .complex import (AngleAssignment, Triangulation, ValidationReport, boundary_of, check_c1_c2,
                      complete_to_G_tilde, edge_key, validate_complex, InconsistentDataError)
from .geometry import HALF_PI, Geometry, as_geometry
from .solver import HOROCYCLIC

FORMAT_VERSION = 1

NAMED_ANGLES = {"0": 0.0, "pi/2": math.pi / 2, "pi/3": math.pi / 3, "pi/4": math.pi / 4, "pi/6": math.pi / 6}

TOP_KEYS = {"format", "name", "geometry", "generator", "vertices", "faces", "theta", "default_theta",
            "boundary", "boundary_default", "v0"}
GENERATOR_KEYS = {"name", "depth", "max_angle", "seed"}
VERTEX_KEYS = {"id", "position"}
THETA_KEYS = {"edge", "angle"}


class SpecParseError(ValueError):
    """Malformed file; ``where`` names the line or field."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


class SpecValidationError(ValueError):
    def __init__(self, message: str, report: Optional[ValidationReport] = None):
        super().__init__(message)
        self.report = report


@dataclass
class PatternSpec:
    triangulation: Triangulation
    angles: AngleAssignment
    boundary: Dict[int, Union[float, str]]
    geometry: Geometry
    v0: Optional[int] = None
    name: str = ""
    generator: Optional[Dict[str, Any]] = None
    boundary_explicit: bool = field(default=False, repr=False)


def parse_angle(x, where: str) -> float:
    if isinstance(x, bool):
        raise SpecParseError("angle must be a number or a named angle", where)
    if isinstance(x, str):
        if x not in NAMED_ANGLES:
            raise SpecParseError(f"unknown angle name {x!r}; use one of {sorted(NAMED_ANGLES)}", where)
        return NAMED_ANGLES[x]
    if isinstance(x, (int, float)):
        val = float(x)
        if math.isnan(val) or not 0.0 <= val <= HALF_PI:
            raise SpecValidationError(f"{where}: angle {val} lies outside [0, pi/2]")
        return val
    raise SpecParseError("angle must be a number or a named angle", where)


def _unknown(obj: Mapping, allowed, where: str):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SpecParseError(f"unknown field(s) {extra}", where)


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SpecParseError("expected an integer vertex id", where)
    return x


def _radius(x, where: str) -> Union[float, str]:
    if x == HOROCYCLIC:
        return HOROCYCLIC
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecParseError("radius must be a positive number or \"horocyclic\"", where)
    if not (x > 0 and math.isfinite(x)):
        raise SpecValidationError(f"{where}: radius must be positive and finite, got {x}")
    return float(x)


def parse_spec(data: Union[bytes, str, Mapping]) -> PatternSpec:
    """Parse and validate a pattern file."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SpecParseError(f"not UTF-8 text ({exc.reason})", f"byte {exc.start}") from None
    if isinstance(data, str):
        try:
            obj = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SpecParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    else:
        obj = data
    if not isinstance(obj, dict):
        raise SpecParseError("top level must be an object", "$")
    _unknown(obj, TOP_KEYS, "$")
    fmt = obj.get("format", FORMAT_VERSION)
    if fmt != FORMAT_VERSION:
        raise SpecParseError(f"unsupported format version {fmt!r}", "format")
    try:
        geometry = as_geometry(obj.get("geometry", "euclidean"))
    except ValueError:
        raise SpecParseError(f"unknown geometry {obj.get('geometry')!r}", "geometry") from None

    gen_info = None
    if "generator" in obj:
        if "faces" in obj or "vertices" in obj or "theta" in obj:
            raise SpecParseError("give either a generator or an explicit complex, not both", "generator")
        t, a, v0, gen_info = _from_generator(obj["generator"])
    else:
        t, a = _explicit(obj)
        v0 = None
    if "v0" in obj:
        v0 = _int(obj["v0"], "v0")
        if v0 not in t.neighbors:
            raise SpecValidationError(f"v0: vertex {v0} is not in the complex")

    report = validate_complex(t)
    if not report.passed:
        raise SpecValidationError("complex is not a valid disk triangulation", report)
    try:
        a = complete_to_G_tilde(t, a)
    except InconsistentDataError as exc:
        raise SpecValidationError(str(exc)) from None
    cond = check_c1_c2(t, a)
    if not cond.passed:
        raise SpecValidationError("angle data fails the realizability conditions", cond)

    bnd = boundary_of(t, a)
    default = obj.get("boundary_default", HOROCYCLIC if geometry is Geometry.HYPERBOLIC else 1.0)
    default = _radius(default, "boundary_default")
    raw = obj.get("boundary", {})
    if not isinstance(raw, dict):
        raise SpecParseError("expected an object mapping vertex ids to radii", "boundary")
    given: Dict[int, Union[float, str]] = {}
    for key, val in raw.items():
        where = f"boundary.{key}"
        try:
            v = int(key)
        except ValueError:
            raise SpecParseError("vertex ids must be integers", where) from None
        if v not in bnd:
            raise SpecValidationError(f"{where}: vertex {v} is not a boundary vertex")
        given[v] = _radius(val, where)
    boundary = {v: given.get(v, default) for v in bnd}
    if geometry is Geometry.EUCLIDEAN and any(x == HOROCYCLIC for x in boundary.values()):
        raise SpecValidationError("horocyclic radii need hyperbolic geometry")
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise SpecParseError("expected a string", "name")
    return PatternSpec(t, a, boundary, geometry, v0, name, gen_info, bool(raw))


def _from_generator(g) -> Tuple[Triangulation, AngleAssignment, int, dict]:
    from .complex import exhaustion
    from .generators import PerturbedAngles, make_generator

    if not isinstance(g, dict):
        raise SpecParseError("expected an object", "generator")
    _unknown(g, GENERATOR_KEYS, "generator")
    name = g.get("name")
    depth = g.get("depth")
    if not isinstance(name, str):
        raise SpecParseError("missing generator name", "generator.name")
    if isinstance(depth, bool) or not isinstance(depth, int) or depth < 1:
        raise SpecParseError("depth must be a positive integer", "generator.depth")
    try:
        gen = make_generator(name)
    except ValueError as exc:
        raise SpecParseError(str(exc), "generator.name") from None
    if "max_angle" in g or "seed" in g:
        gen = PerturbedAngles(gen, parse_angle(g.get("max_angle", 1.2), "generator.max_angle"),
                              _int(g.get("seed", 0), "generator.seed"))
    term = exhaustion(gen, gen.origin, depth, start=depth)[-1]
    return term.triangulation, term.angles, gen.origin, dict(g)


def _explicit(obj) -> Tuple[Triangulation, AngleAssignment]:
    faces_raw = obj.get("faces")
    if not isinstance(faces_raw, list) or not faces_raw:
        raise SpecParseError("expected a nonempty list of faces", "faces")
    faces = []
    for k, f in enumerate(faces_raw):
        where = f"faces[{k}]"
        if not isinstance(f, list) or len(f) != 3:
            raise SpecParseError("a face is a list of three vertex ids", where)
        faces.append(tuple(_int(x, f"{where}[{i}]") for i, x in enumerate(f)))
    positions: Optional[Dict[int, Tuple[float, float]]] = None
    declared = None
    if "vertices" in obj:
        verts = obj["vertices"]
        if not isinstance(verts, list):
            raise SpecParseError("expected a list", "vertices")
        declared = set()
        pos: Dict[int, Tuple[float, float]] = {}
        for k, item in enumerate(verts):
            where = f"vertices[{k}]"
            if isinstance(item, dict):
                _unknown(item, VERTEX_KEYS, where)
                v = _int(item.get("id"), f"{where}.id")
                if "position" in item:
                    p = item["position"]
                    if (not isinstance(p, list) or len(p) != 2
                            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)):
                        raise SpecParseError("position is a pair of numbers", f"{where}.position")
                    pos[v] = (float(p[0]), float(p[1]))
            else:
                v = _int(item, where)
            if v in declared:
                raise SpecParseError(f"duplicate vertex {v}", where)
            declared.add(v)
        positions = pos or None
    used = {v for f in faces for v in f}
    if declared is not None and used != declared:
        missing = sorted(used - declared)
        isolated = sorted(declared - used)
        raise SpecValidationError(f"vertex list does not match faces: undeclared {missing[:10]}, "
                                  f"isolated {isolated[:10]}")
    if positions is not None and set(positions) != used:
        positions = None
    t = Triangulation(tuple(faces), positions)

    theta: Dict[Tuple[int, int], float] = {}
    raw = obj.get("theta", [])
    if not isinstance(raw, list):
        raise SpecParseError("expected a list", "theta")
    for k, item in enumerate(raw):
        where = f"theta[{k}]"
        if isinstance(item, dict):
            _unknown(item, THETA_KEYS, where)
            e, ang = item.get("edge"), item.get("angle")
        elif isinstance(item, list) and len(item) == 3:
            e, ang = item[:2], item[2]
        else:
            raise SpecParseError("entry is {\"edge\": [u, v], \"angle\": x} or [u, v, x]", where)
        if not isinstance(e, list) or len(e) != 2:
            raise SpecParseError("edge is a pair of vertex ids", f"{where}.edge")
        key = edge_key(_int(e[0], f"{where}.edge"), _int(e[1], f"{where}.edge"))
        if key not in t.edge_set:
            raise SpecValidationError(f"{where}: {list(key)} is not an edge of the complex")
        if key in theta:
            raise SpecParseError(f"duplicate angle for edge {list(key)}", where)
        theta[key] = parse_angle(ang, f"{where}.angle")
    if "default_theta" in obj:
        d = parse_angle(obj["default_theta"], "default_theta")
        for e in t.edges:
            theta.setdefault(e, d)
    missing = [e for e in t.edges if e not in theta]
    if missing:
        raise SpecValidationError(f"no angle for edges {[list(e) for e in missing[:10]]}; "
                                  "give them or set default_theta")
    return t, AngleAssignment(theta)


def _angle_out(x: float):
    for name, val in NAMED_ANGLES.items():
        if x == val:
            return name
    return x


def serialize_spec(spec: PatternSpec) -> str:
    """Explicit-complex JSON that parses back to the same objects."""
    t, a = spec.triangulation, spec.angles
    if t.positions:
        verts = [{"id": v, "position": list(t.positions[v])} for v in t.vertices]
    else:
        verts = list(t.vertices)
    obj: Dict[str, Any] = {"format": FORMAT_VERSION}
    if spec.name:
        obj["name"] = spec.name
    obj["geometry"] = spec.geometry.value
    obj["vertices"] = verts
    obj["faces"] = [list(f) for f in t.faces]
    obj["theta"] = [{"edge": list(e), "angle": _angle_out(a.theta[e])} for e in t.edges]
    obj["boundary"] = {str(v): r for v, r in sorted(spec.boundary.items())}
    if spec.v0 is not None:
        obj["v0"] = spec.v0
    return json.dumps(obj, indent=1)


def load_spec(path: str) -> PatternSpec:
    with open(path, "rb") as fh:
        return parse_spec(fh.read())
