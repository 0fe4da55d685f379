"""Infinite triangulations given by neighbor/face callbacks.

Each generator hands out integer vertex ids and, on request, the faces around
a vertex.  Lattice vertices are encoded from their integer coordinates so ids
are stable across exhaustion depths.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .complex import AngleAssignment, Face, Triangulation, canonical_face, edge_key
from .geometry import HALF_PI


def _zigzag(i: int) -> int:
    return 2 * i if i >= 0 else -2 * i - 1


def _unzigzag(z: int) -> int:
    return z // 2 if z % 2 == 0 else -(z + 1) // 2


def encode(i: int, j: int) -> int:
    """Cantor pairing of zigzag-encoded integer coordinates."""
    a, b = _zigzag(i), _zigzag(j)
    return (a + b) * (a + b + 1) // 2 + b


def decode(n: int) -> Tuple[int, int]:
    w = (math.isqrt(8 * n + 1) - 1) // 2
    b = n - w * (w + 1) // 2
    return _unzigzag(w - b), _unzigzag(b)


class Generator:
    """Base class: an infinite (or finite) triangulation with angles."""

    name = "generator"
    origin = 0

    def neighbors(self, v: int) -> List[int]:
        raise NotImplementedError

    def faces_at(self, v: int) -> List[Face]:
        raise NotImplementedError

    def theta(self, u: int, v: int) -> float:
        return 0.0

    def position(self, v: int) -> Optional[Tuple[float, float]]:
        return None

    def positions(self, verts: Iterable[int]) -> Optional[Dict[int, Tuple[float, float]]]:
        out = {}
        for v in verts:
            p = self.position(v)
            if p is None:
                return None
            out[v] = p
        return out

    def ensure_depth(self, v0: int, depth: int) -> None:
        """Make neighbor and face data complete out to the given ball radius."""


class _PlanarLattice(Generator):
    """Triangular lattice in integer coordinates with a chosen diagonal."""

    steps: Sequence[Tuple[int, int]] = ()

    def __init__(self, theta: float | Callable[[int, int], float] = 0.0):
        self._theta = theta

    def neighbors(self, v):
        i, j = decode(v)
        return [encode(i + di, j + dj) for di, dj in self.steps]

    def faces_at(self, v):
        i, j = decode(v)
        out = []
        for corners in self._face_templates():
            for k, (ci, cj) in enumerate(corners):
                oi, oj = i - ci, j - cj
                out.append(tuple(encode(oi + a, oj + b) for a, b in corners))
        return out

    def _face_templates(self):
        raise NotImplementedError

    def theta(self, u, v):
        if callable(self._theta):
            return float(self._theta(u, v))
        return float(self._theta)


class HexLattice(_PlanarLattice):
    """Regular triangular lattice (six neighbors); centers spaced 2 apart."""

    name = "hex"
    steps = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

    def _face_templates(self):
        return (((0, 0), (1, 0), (0, 1)), ((1, 0), (1, 1), (0, 1)))

    def position(self, v):
        i, j = decode(v)
        return (2.0 * i + j, math.sqrt(3.0) * j)


class SquareGrid(_PlanarLattice):
    """Square grid split by the (1, 1) diagonals.

    Axis edges meet at pi/2 and diagonals are tangent, so every square is a
    reducible configuration whose partner diagonal gets added on completion.
    """

    name = "square-grid"
    steps = ((1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1))

    def __init__(self):
        super().__init__(self._grid_theta)

    @staticmethod
    def _grid_theta(u, v):
        (i1, j1), (i2, j2) = decode(u), decode(v)
        return 0.0 if (i1 != i2 and j1 != j2) else HALF_PI

    def _face_templates(self):
        return (((0, 0), (1, 0), (1, 1)), ((0, 0), (1, 1), (0, 1)))

    def position(self, v):
        i, j = decode(v)
        return (float(i), float(j))


class DegreeSeven(Generator):
    """Triangulation of the plane with every vertex of degree 7.

    Built ring by ring around vertex 0: a ring vertex that already has d
    neighbors receives 7 - d neighbors in the next ring, and consecutive
    ring vertices share the new vertex between them.
    """

    name = "degree7"
    degree = 7

    def __init__(self, theta: float = 0.0):
        self._theta = float(theta)
        self._nbrs: Dict[int, set] = {0: set()}
        self._faces: Dict[int, List[Face]] = {0: []}
        self.rings: List[List[int]] = [[0]]
        self.ring_of: Dict[int, int] = {0: 0}
        first = list(range(1, self.degree + 1))
        for v in first:
            self._new(v)
        for k, v in enumerate(first):
            self._face((0, v, first[(k + 1) % len(first)]))
        self.rings.append(first)
        self.ring_of.update((v, 1) for v in first)
        self._next = self.degree + 1

    def _new(self, v):
        self._nbrs[v] = set()
        self._faces[v] = []

    def _face(self, f):
        a, b, c = f
        for x, y in ((a, b), (b, c), (c, a)):
            self._nbrs[x].add(y)
            self._nbrs[y].add(x)
        for x in f:
            self._faces[x].append(f)

    def _grow(self):
        ring = self.rings[-1]
        m = len(ring)
        new_by_vertex: List[List[int]] = []
        for v in ring:
            need = self.degree - len(self._nbrs[v])
            if need < 2:
                raise RuntimeError("ring construction requires at least two new neighbors")
            made = list(range(self._next, self._next + need - 1))
            self._next += need - 1
            for w in made:
                self._new(w)
            new_by_vertex.append(made)
        outer: List[int] = []
        for k, v in enumerate(ring):
            prev_t = new_by_vertex[k - 1][-1]
            fan = [prev_t] + new_by_vertex[k]
            for x, y in zip(fan, fan[1:]):
                self._face((v, x, y))
            self._face((v, fan[-1], ring[(k + 1) % m]))
            outer.extend(new_by_vertex[k])
        self.rings.append(outer)
        self.ring_of.update((v, len(self.rings) - 1) for v in outer)

    def ensure_depth(self, v0, depth):
        if v0 != 0:
            raise ValueError("the degree-7 generator is centered at vertex 0")
        while len(self.rings) <= depth + 1:
            self._grow()

    def _ensure_vertex(self, v):
        while v not in self.ring_of or self.ring_of[v] >= len(self.rings) - 1:
            if v not in self.ring_of and v < self._next:
                raise KeyError(v)
            self._grow()

    def neighbors(self, v):
        self._ensure_vertex(v)
        return sorted(self._nbrs[v])

    def faces_at(self, v):
        self._ensure_vertex(v)
        return list(self._faces[v])

    def theta(self, u, v):
        return self._theta


class ComplexGenerator(Generator):
    """Adapter so a finite complex can be exhausted like a lattice."""

    name = "finite"

    def __init__(self, t: Triangulation, a: Optional[AngleAssignment] = None):
        self.t = t
        self.a = a if a is not None else AngleAssignment.constant(t, 0.0)

    def neighbors(self, v):
        return list(self.t.neighbors[v])

    def faces_at(self, v):
        return [self.t.faces[k] for k in self.t.vertex_faces[v]]

    def theta(self, u, v):
        return self.a.theta[edge_key(u, v)]

    def position(self, v):
        return None if self.t.positions is None else self.t.positions.get(v)


class PerturbedAngles(Generator):
    """Same combinatorics as ``base`` with angles drawn per edge from
    [0, max_angle], reproducibly from the seed."""

    def __init__(self, base: Generator, max_angle: float = 1.2, seed: int = 0):
        if not 0 <= max_angle < HALF_PI:
            raise ValueError("max_angle must lie in [0, pi/2) so no orthogonal squares arise")
        self.base = base
        self.max_angle = float(max_angle)
        self.seed = int(seed)
        self.name = f"{base.name}-perturbed"
        self.origin = base.origin

    def neighbors(self, v):
        return self.base.neighbors(v)

    def faces_at(self, v):
        return self.base.faces_at(v)

    def theta(self, u, v):
        e = edge_key(u, v)
        rng = np.random.default_rng((self.seed, e[0], e[1]))
        return float(rng.uniform(0.0, self.max_angle))

    def position(self, v):
        return self.base.position(v)

    def ensure_depth(self, v0, depth):
        self.base.ensure_depth(v0, depth)


GENERATORS = {"hex": HexLattice, "square-grid": SquareGrid, "degree7": DegreeSeven}


def make_generator(name: str, **kwargs) -> Generator:
    try:
        return GENERATORS[name](**kwargs)
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None


def as_generator(source) -> Generator:
    if isinstance(source, Generator):
        return source
    if isinstance(source, str):
        return make_generator(source)
    if isinstance(source, Triangulation):
        return ComplexGenerator(source)
    if isinstance(source, tuple) and len(source) == 2:
        return ComplexGenerator(*source)
    raise TypeError(f"cannot exhaust {type(source).__name__}")


def lattice_ball(name: str, depth: int, **kwargs):
    """Triangulation and completed angles of the depth-``depth`` ball at the origin."""
    from .complex import exhaustion

    gen = make_generator(name, **kwargs)
    origin = gen.origin
    term = exhaustion(gen, origin, depth, start=depth)[-1]
    return term.triangulation, term.angles, origin


def wheel(n: int = 6) -> Triangulation:
    """A center vertex 0 surrounded by the cycle 1..n."""
    return Triangulation(tuple((0, k, k % n + 1) for k in range(1, n + 1)))


def single_triangle() -> Triangulation:
    return Triangulation(((0, 1, 2),))
