"""Triangulated disks, angle assignments and the conditions on them."""
from __future__ import annotations

import itertools
import math
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .geometry import ANGLE_ATOL, HALF_PI

Edge = Tuple[int, int]
Face = Tuple[int, int, int]


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def canonical_face(face: Sequence[int]) -> Face:
    """Rotate an oriented triple so the smallest vertex comes first."""
    a, b, c = face
    m = min(face)
    if m == a:
        return (a, b, c)
    if m == b:
        return (b, c, a)
    return (c, a, b)


class InconsistentDataError(ValueError):
    """Angle data contradicts the reducible-edge completion."""


@dataclass(frozen=True)
class Triangulation:
    """A finite simplicial complex made of oriented triangles.

    Faces are vertex triples listed counterclockwise.  Derived structure
    (edges, links, boundary cycles) is computed lazily and cached.
    """

    faces: Tuple[Face, ...]
    positions: Optional[Mapping[int, Tuple[float, float]]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "faces", tuple(tuple(int(x) for x in f) for f in self.faces))

    @cached_property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted({v for f in self.faces for v in f}))

    @cached_property
    def edge_faces(self) -> Dict[Edge, List[int]]:
        out: Dict[Edge, List[int]] = defaultdict(list)
        for k, (a, b, c) in enumerate(self.faces):
            for u, v in ((a, b), (b, c), (c, a)):
                out[edge_key(u, v)].append(k)
        return dict(out)

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edge_faces))

    @cached_property
    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self.edge_faces)

    @cached_property
    def neighbors(self) -> Dict[int, Tuple[int, ...]]:
        nb: Dict[int, set] = defaultdict(set)
        for u, v in self.edge_faces:
            nb[u].add(v)
            nb[v].add(u)
        return {v: tuple(sorted(nb[v])) for v in self.vertices}

    @cached_property
    def vertex_faces(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = defaultdict(list)
        for k, f in enumerate(self.faces):
            for v in f:
                out[v].append(k)
        return dict(out)

    @cached_property
    def face_set(self) -> FrozenSet[FrozenSet[int]]:
        return frozenset(frozenset(f) for f in self.faces)

    def link(self, v: int) -> Tuple[List[int], bool]:
        """Neighbors of v in counterclockwise order and whether they close up."""
        succ: Dict[int, int] = {}
        for k in self.vertex_faces.get(v, ()):
            a, b, c = self.faces[k]
            if v == a:
                succ[b] = c
            elif v == b:
                succ[c] = a
            else:
                succ[a] = b
        if not succ:
            return [], False
        targets = set(succ.values())
        starts = [u for u in succ if u not in targets]
        start = min(starts) if starts else min(succ)
        chain = [start]
        cur = start
        while cur in succ and len(chain) <= len(succ):
            cur = succ[cur]
            if cur == start:
                return chain, True
            chain.append(cur)
        return chain, False

    @cached_property
    def boundary_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e, fs in sorted(self.edge_faces.items()) if len(fs) == 1)

    @cached_property
    def boundary_cycles(self) -> Tuple[Tuple[int, ...], ...]:
        """Boundary cycles, each traversed with the complex on its left."""
        succ: Dict[int, List[int]] = defaultdict(list)
        for e in self.boundary_edges:
            a, b, c = self.faces[self.edge_faces[e][0]]
            for u, w in ((a, b), (b, c), (c, a)):
                if edge_key(u, w) == e:
                    succ[u].append(w)
        for u in succ:
            succ[u].sort()
        used = set()
        cycles = []
        for start in sorted(succ):
            for first in succ[start]:
                if (start, first) in used:
                    continue
                cyc = [start]
                u, w = start, first
                while (u, w) not in used:
                    used.add((u, w))
                    if w == start:
                        break
                    cyc.append(w)
                    nxt = [x for x in succ.get(w, []) if (w, x) not in used]
                    if not nxt:
                        break
                    u, w = w, nxt[0]
                cycles.append(tuple(cyc))
        return tuple(cycles)

    @cached_property
    def boundary_vertices(self) -> FrozenSet[int]:
        return frozenset(v for e in self.boundary_edges for v in e)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)


@dataclass
class ValidationReport:
    passed: bool
    errors: List[dict] = field(default_factory=list)
    boundary_cycles: List[List[int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "errors": self.errors,
                "boundary_cycles": self.boundary_cycles}


def validate_complex(t: Triangulation) -> ValidationReport:
    """Check the simplicial-surface invariants; every violation is listed."""
    errors: List[dict] = []
    if not t.faces:
        errors.append({"kind": "empty", "detail": "complex has no faces"})
        return ValidationReport(False, errors)
    seen: Dict[FrozenSet[int], Face] = {}
    for f in t.faces:
        if len(set(f)) != 3:
            errors.append({"kind": "degenerate-face", "face": list(f)})
            continue
        key = frozenset(f)
        if key in seen:
            errors.append({"kind": "duplicate-face", "face": list(f)})
        seen[key] = f
    if errors:
        return ValidationReport(False, errors)
    for e, fs in sorted(t.edge_faces.items()):
        if len(fs) > 2:
            errors.append({"kind": "non-manifold-edge", "edge": list(e), "faces": len(fs)})
        elif len(fs) == 2:
            f1, f2 = (t.faces[k] for k in fs)
            if _directed(f1, e) == _directed(f2, e):
                errors.append({"kind": "inconsistent-orientation", "edge": list(e)})
    if not errors:
        for v in t.vertices:
            chain, closed = t.link(v)
            if len(chain) != len(t.vertex_faces[v]) + (0 if closed else 1):
                errors.append({"kind": "non-manifold-vertex", "vertex": v})
    if not _connected(t):
        errors.append({"kind": "disconnected", "detail": "complex is not connected"})
    return ValidationReport(not errors, errors, [list(c) for c in t.boundary_cycles] if not errors else [])


def _directed(face: Face, e: Edge) -> Edge:
    a, b, c = face
    for u, w in ((a, b), (b, c), (c, a)):
        if edge_key(u, w) == e:
            return (u, w)
    raise KeyError(e)


def _connected(t: Triangulation) -> bool:
    if not t.vertices:
        return True
    start = t.vertices[0]
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in t.neighbors[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(t.vertices)


# Angle assignments ----------------------------------------------------------


def is_right(x: float) -> bool:
    return abs(x - HALF_PI) <= ANGLE_ATOL


def is_zero(x: float) -> bool:
    return abs(x) <= ANGLE_ATOL


@dataclass(frozen=True)
class AngleAssignment:
    """Dihedral angles on the edges of a complex, plus the completed diagonals.

    ``theta`` holds the original edges; ``completed_edges`` are the partner
    diagonals added by :func:`complete_to_G_tilde`, which carry angle 0.
    """

    theta: Mapping[Edge, float]
    completed_edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        clean = {}
        for (u, v), x in self.theta.items():
            x = float(x)
            if not (0.0 <= x <= HALF_PI + ANGLE_ATOL) or math.isnan(x):
                raise ValueError(f"angle {x!r} on edge {(u, v)} outside [0, pi/2]")
            clean[edge_key(u, v)] = min(x, HALF_PI)
        object.__setattr__(self, "theta", clean)
        object.__setattr__(self, "completed_edges",
                           frozenset(edge_key(*e) for e in self.completed_edges))

    @classmethod
    def constant(cls, t: Triangulation, value: float = 0.0) -> "AngleAssignment":
        return cls({e: value for e in t.edges})

    @classmethod
    def from_function(cls, t: Triangulation, fn: Callable[[int, int], float]) -> "AngleAssignment":
        return cls({e: fn(*e) for e in t.edges})

    @cached_property
    def theta_tilde(self) -> Dict[Edge, float]:
        out = dict(self.theta)
        for e in self.completed_edges:
            out[e] = 0.0
        return out

    def __getitem__(self, e: Edge) -> float:
        return self.theta_tilde[edge_key(*e)]

    def missing_edges(self, t: Triangulation) -> List[Edge]:
        return [e for e in t.edges if e not in self.theta]


def _right_adjacency(t: Triangulation, a: AngleAssignment) -> Dict[int, set]:
    adj: Dict[int, set] = defaultdict(set)
    for (u, v) in t.edges:
        if is_right(a.theta[(u, v)]):
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _right_squares(t: Triangulation, a: AngleAssignment):
    """Yield each simple 4-cycle of pi/2 edges once, as (v0, v1, v2, v3)."""
    adj = _right_adjacency(t, a)
    seen = set()
    for v0 in sorted(adj):
        for v1, v3 in itertools.combinations(sorted(adj[v0]), 2):
            for v2 in sorted((adj[v1] & adj[v3]) - {v0}):
                key = frozenset((edge_key(v0, v2), edge_key(v1, v3)))
                if key in seen:
                    continue
                seen.add(key)
                yield (v0, v1, v2, v3)


def detect_reducible_edges(t: Triangulation, a: AngleAssignment) -> FrozenSet[Edge]:
    """Zero-angle diagonals of 4-cycles whose four sides are orthogonal.

    Diagonals are looked up in the completed graph, so after completion both
    partners of each configuration are returned.
    """
    tt = a.theta_tilde
    out = set()
    for v0, v1, v2, v3 in _right_squares(t, a):
        for e in (edge_key(v0, v2), edge_key(v1, v3)):
            if e in tt and is_zero(tt[e]):
                out.add(e)
    return frozenset(out)


def complete_to_G_tilde(t: Triangulation, a: AngleAssignment) -> AngleAssignment:
    """Add the missing partner diagonal of every reducible configuration."""
    tt = a.theta_tilde
    added = set(a.completed_edges)
    for v0, v1, v2, v3 in _right_squares(t, a):
        d1, d2 = edge_key(v0, v2), edge_key(v1, v3)
        for d, other in ((d1, d2), (d2, d1)):
            if d in tt and is_zero(tt[d]):
                if other not in tt and other not in added:
                    added.add(other)
                elif other in tt and not is_zero(tt[other]):
                    raise InconsistentDataError(
                        f"edge {other} completes a reducible pair but has angle {tt[other]}")
    return AngleAssignment(a.theta, frozenset(added))


def completed_edge_set(t: Triangulation, a: AngleAssignment) -> List[Edge]:
    return sorted(set(t.edges) | set(a.completed_edges))


def check_c1_c2(t: Triangulation, a: AngleAssignment) -> ValidationReport:
    """Check the separating-triangle and orthogonal-square conditions."""
    errors: List[dict] = []
    missing = a.missing_edges(t)
    if missing:
        return ValidationReport(False, [{"kind": "missing-angle", "edges": [list(e) for e in missing]}])
    nb = {v: set(t.neighbors[v]) for v in t.vertices}
    for u, v in t.edges:
        for w in sorted(nb[u] & nb[v]):
            if w <= v:
                continue
            if frozenset((u, v, w)) in t.face_set:
                continue
            total = a.theta[(u, v)] + a.theta[edge_key(u, w)] + a.theta[edge_key(v, w)]
            if total >= math.pi - ANGLE_ATOL:
                errors.append({"kind": "C1", "loop": [u, v, w], "angle_sum": total})
    for v0, v1, v2, v3 in _right_squares(t, a):
        if edge_key(v0, v2) not in t.edge_set and edge_key(v1, v3) not in t.edge_set:
            errors.append({"kind": "C2", "loop": [v0, v1, v2, v3]})
    return ValidationReport(not errors, errors)


class VertexClass(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


def classify_vertices(t: Triangulation, a: AngleAssignment) -> Dict[int, VertexClass]:
    """Interior iff the neighbors form a closed chain of length >= 4, or of
    length 3 with no reducible spoke.  Vertices with an open link are boundary.
    """
    reducible = detect_reducible_edges(t, a)
    out: Dict[int, VertexClass] = {}
    for v in t.vertices:
        chain, closed = t.link(v)
        interior = False
        if closed:
            if len(chain) >= 4:
                interior = True
            elif len(chain) == 3:
                interior = all(edge_key(v, w) not in reducible for w in chain)
        out[v] = VertexClass.INTERIOR if interior else VertexClass.BOUNDARY
    return out


def interior_vertices(t: Triangulation, a: AngleAssignment) -> List[int]:
    cls = classify_vertices(t, a)
    return [v for v in t.vertices if cls[v] is VertexClass.INTERIOR]


def boundary_of(t: Triangulation, a: AngleAssignment) -> List[int]:
    cls = classify_vertices(t, a)
    return [v for v in t.vertices if cls[v] is VertexClass.BOUNDARY]


# Exhaustion -----------------------------------------------------------------


class ExhaustionWarning(UserWarning):
    pass


def ball(neighbors: Callable[[int], Iterable[int]], v0: int, radius: int) -> Dict[int, int]:
    """Combinatorial distances from v0 up to the given radius."""
    dist = {v0: 0}
    frontier = [v0]
    for k in range(1, radius + 1):
        nxt = []
        for u in frontier:
            for w in neighbors(u):
                if w not in dist:
                    dist[w] = k
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    return dist


def _faces_within(faces_at: Callable[[int], Iterable[Face]], verts: set) -> List[Face]:
    faces = set()
    for v in verts:
        for f in faces_at(v):
            if all(x in verts for x in f):
                faces.add(canonical_face(f))
    return sorted(faces)


def _is_disk(t: Triangulation) -> bool:
    rep = validate_complex(t)
    return rep.passed and len(t.boundary_cycles) == 1 and t.euler_characteristic() == 1


def _repair(faces_at, verts: set, max_rounds: int = 8) -> Tuple[List[Face], set]:
    """Grow a truncation by fringe faces until it triangulates a closed disk."""
    faces = _faces_within(faces_at, verts)
    for _ in range(max_rounds):
        t = Triangulation(tuple(faces))
        if _is_disk(t):
            return faces, verts
        # Pinched vertices have a broken link; add every face around them.
        bad = []
        for v in t.vertices:
            chain, closed = t.link(v)
            if not closed and len(chain) != len(t.vertex_faces[v]) + 1:
                bad.append(v)
            elif closed and len(t.boundary_cycles) > 1:
                pass
        if not bad:
            # Holes: fill every face touching a vertex on a secondary cycle.
            cycles = sorted(t.boundary_cycles, key=len)
            bad = [v for c in cycles[:-1] for v in c]
        for v in bad:
            for f in faces_at(v):
                verts.update(f)
        faces = _faces_within(faces_at, verts)
    return faces, verts


@dataclass(frozen=True)
class ExhaustionTerm:
    depth: int
    triangulation: Triangulation
    angles: AngleAssignment
    distance: Mapping[int, int]


def exhaustion(source, v0: int, n: int, start: int = 1) -> List[ExhaustionTerm]:
    """Nested disk triangulations from combinatorial balls around v0.

    ``source`` is a lattice generator or a finite (Triangulation,
    AngleAssignment) pair.  Terms stop early with a warning once the input is
    exhausted.
    """
    from .generators import as_generator

    gen = as_generator(source)
    terms: List[ExhaustionTerm] = []
    prev_size = -1
    for k in range(start, n + 1):
        gen.ensure_depth(v0, k)
        dist = ball(gen.neighbors, v0, k)
        faces, verts = _repair(gen.faces_at, set(dist))
        if len(verts) == prev_size:
            warnings.warn(f"input exhausted at depth {k - 1}; sequence truncated",
                          ExhaustionWarning, stacklevel=2)
            break
        prev_size = len(verts)
        pos = gen.positions(verts)
        t = Triangulation(tuple(faces), pos)
        a = complete_to_G_tilde(t, AngleAssignment.from_function(t, gen.theta))
        terms.append(ExhaustionTerm(k, t, a, dist))
    return terms
