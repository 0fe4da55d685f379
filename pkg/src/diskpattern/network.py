"""Conductance networks of solved patterns and their discrete Laplacian."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .complex import AngleAssignment, Edge, Triangulation, ball, complete_to_G_tilde, edge_key
from .geometry import Geometry, GeometryLike, as_geometry
from .solver import PatternSystem, RadiusVector

CONDUCTANCE_SUM_BOUND = 8.0 * math.pi
RESIDUAL_RTOL = 1e-12


class Unbounded:
    """Tagged stand-in for an infinite resistance or extremal length."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __eq__(self, other):
        return isinstance(other, Unbounded)

    def __hash__(self):
        return hash("UNBOUNDED")

    def to_json(self):
        return "unbounded"


UNBOUNDED = Unbounded()


def is_unbounded(x) -> bool:
    return isinstance(x, Unbounded)


class DisconnectedError(ValueError):
    pass


@dataclass
class ResistorNetwork:
    """Edge conductances on a vertex set.  Zero-conductance edges are kept
    for bookkeeping but play no part in the Laplacian."""

    vertices: List[int]
    edges: List[Edge]
    mu: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if np.any(self.mu < 0):
            raise ValueError("conductances must be nonnegative")
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self.edge_index = {e: k for k, e in enumerate(self.edges)}
        self._nbrs: Dict[int, List[Tuple[int, float]]] = {v: [] for v in self.vertices}
        for (u, v), m in zip(self.edges, self.mu):
            if m > 0:
                self._nbrs[u].append((v, float(m)))
                self._nbrs[v].append((u, float(m)))

    @classmethod
    def from_dict(cls, mu: Mapping[Edge, float]) -> "ResistorNetwork":
        edges = sorted(edge_key(*e) for e in mu)
        verts = sorted({v for e in edges for v in e})
        vals = {edge_key(*e): m for e, m in mu.items()}
        return cls(verts, edges, np.array([vals[e] for e in edges]))

    def conductance(self, u: int, v: int) -> float:
        k = self.edge_index.get(edge_key(u, v))
        return 0.0 if k is None else float(self.mu[k])

    def neighbors(self, v: int) -> List[Tuple[int, float]]:
        return self._nbrs[v]

    @property
    def reduced_edges(self) -> List[Edge]:
        return [e for e, m in zip(self.edges, self.mu) if m > 0]

    def conductance_sums(self) -> Dict[int, float]:
        return {v: sum(m for _, m in self._nbrs[v]) for v in self.vertices}

    def with_conductance(self, e: Edge, value: float) -> "ResistorNetwork":
        mu = self.mu.copy()
        mu[self.edge_index[edge_key(*e)]] = value
        return ResistorNetwork(list(self.vertices), list(self.edges), mu)

    def laplacian(self) -> sp.csr_matrix:
        """Matrix L with (L h)(v) = sum_w mu(v, w) (h(w) - h(v))."""
        n = len(self.vertices)
        keep = self.mu > 0
        iu = np.array([self.index[u] for u, _ in self.edges], dtype=np.int64)[keep]
        iv = np.array([self.index[v] for _, v in self.edges], dtype=np.int64)[keep]
        m = self.mu[keep]
        W = sp.coo_matrix((np.concatenate([m, m]), (np.concatenate([iu, iv]), np.concatenate([iv, iu]))),
                          shape=(n, n)).tocsr()
        return (W - sp.diags(np.asarray(W.sum(axis=1)).ravel())).tocsr()

    def summary(self) -> dict:
        sums = self.conductance_sums()
        return {"edges": [{"edge": list(e), "mu": float(m)} for e, m in zip(self.edges, self.mu)],
                "conductance_sums": {str(v): s for v, s in sums.items()}}


def conductances(t: Triangulation, a: AngleAssignment, r: RadiusVector,
                 g: GeometryLike = Geometry.EUCLIDEAN) -> ResistorNetwork:
    """Sum over incident faces of d(corner angle)/d(log radius of the other end).

    Completed diagonals are included with conductance 0.
    """
    g = as_geometry(g)
    if g is not Geometry.EUCLIDEAN:
        raise ValueError("conductances are defined for euclidean patterns")
    a = complete_to_G_tilde(t, a)
    sysm = PatternSystem(t, a, g)
    J = sysm.jacobian_full(np.log(r.array(sysm.vertices))).tocoo()
    vals: Dict[Edge, float] = {}
    for i, j, x in zip(J.row, J.col, J.data):
        if i < j:
            e = edge_key(sysm.vertices[i], sysm.vertices[j])
            vals[e] = vals.get(e, 0.0) + float(x)
    for e in a.completed_edges:
        vals.setdefault(e, 0.0)
    edges = sorted(vals)
    mu = np.array([max(vals[e], 0.0) if vals[e] > -1e-15 else vals[e] for e in edges])
    return ResistorNetwork(list(sysm.vertices), edges, mu)


def laplacian_apply(n: ResistorNetwork, h: Mapping[int, float], v: int) -> float:
    """sum_w mu(v, w) (h(w) - h(v)) over positive-conductance neighbors."""
    if v not in h:
        raise KeyError(f"no value at vertex {v}")
    total = 0.0
    for w, m in n.neighbors(v):
        if w not in h:
            raise KeyError(f"missing value at neighbor {w} of {v}")
        total += m * (h[w] - h[v])
    return total


def _components(n: ResistorNetwork):
    L = n.laplacian()
    return connected_components(L != 0, directed=False)[1]


def solve_dirichlet(n: ResistorNetwork, boundary: Mapping[int, float],
                    interior: Optional[Iterable[int]] = None) -> Dict[int, float]:
    """Harmonic extension of boundary values to the interior set."""
    bset = set(boundary)
    inner = [v for v in (n.vertices if interior is None else interior) if v not in bset]
    out = {v: float(x) for v, x in boundary.items()}
    if not inner:
        return out
    labels = _components(n)
    touched = {labels[n.index[v]] for v in bset if v in n.index}
    orphan = [v for v in inner if labels[n.index[v]] not in touched]
    if orphan:
        raise DisconnectedError(f"vertices {orphan[:10]} have no positive-conductance path to the boundary")
    L = n.laplacian()
    ii = np.array([n.index[v] for v in inner], dtype=np.int64)
    bb = np.array([n.index[v] for v in bset if v in n.index], dtype=np.int64)
    hb = np.array([boundary[n.vertices[k]] for k in bb], dtype=float)
    # Vertices that are neither boundary nor requested interior are not allowed
    # to feed the stencil.
    rest = set(range(len(n.vertices))) - set(ii.tolist()) - set(bb.tolist())
    if rest:
        cols = L[ii][:, sorted(rest)]
        if cols.nnz:
            raise DisconnectedError("interior vertices touch vertices with no assigned value")
    A = (-L[ii][:, ii]).tocsc()
    rhs = L[ii][:, bb] @ hb
    x = spla.spsolve(A, rhs)
    for _ in range(2):
        res = rhs - A @ x
        if np.linalg.norm(res) <= RESIDUAL_RTOL * max(np.linalg.norm(rhs), 1e-300):
            break
        x = x + spla.spsolve(A, res)
    for v, val in zip(inner, x):
        out[v] = float(val)
    if len(hb):
        lo, hi = hb.min(), hb.max()
        slack = 1e-9 * max(1.0, abs(lo), abs(hi))
        if x.min() < lo - slack or x.max() > hi + slack:
            raise ArithmeticError("discrete maximum principle violated; linear solve is inaccurate")
    return out


def dirichlet_energy(n: ResistorNetwork, h: Mapping[int, float]) -> float:
    total = 0.0
    for (u, v), m in zip(n.edges, n.mu):
        if m > 0 and u in h and v in h:
            total += m * (h[u] - h[v]) ** 2
    return total


def boundary_flux(n: ResistorNetwork, h: Mapping[int, float], sources: Iterable[int]) -> float:
    """Net current leaving the given vertex set."""
    return sum(-laplacian_apply(n, h, v) for v in sources)


@dataclass
class ResistanceResult:
    resistance: object
    conductance: float
    potential: Dict[int, float] = field(default_factory=dict)


def effective_resistance(n: ResistorNetwork, V1: Iterable[int], V2: Iterable[int]) -> ResistanceResult:
    """Resistance between two disjoint vertex sets (UNBOUNDED if unconnected)."""
    V1, V2 = set(V1), set(V2)
    if not V1 or not V2:
        raise ValueError("vertex sets must be nonempty")
    if V1 & V2:
        raise ValueError("vertex sets must be disjoint")
    labels = _components(n)
    l1 = {labels[n.index[v]] for v in V1}
    l2 = {labels[n.index[v]] for v in V2}
    shared = l1 & l2
    if not shared:
        return ResistanceResult(UNBOUNDED, 0.0, {})
    inner = [v for v in n.vertices if labels[n.index[v]] in shared and v not in V1 and v not in V2]
    bvals = {v: 0.0 for v in V1 if labels[n.index[v]] in shared}
    bvals.update({v: 1.0 for v in V2 if labels[n.index[v]] in shared})
    sub = _restrict(n, set(inner) | set(bvals))
    h = solve_dirichlet(sub, bvals, inner)
    cond = dirichlet_energy(sub, h)
    return ResistanceResult(1.0 / cond, cond, h)


def _restrict(n: ResistorNetwork, keep: set) -> ResistorNetwork:
    edges = [(e, m) for e, m in zip(n.edges, n.mu) if e[0] in keep and e[1] in keep]
    verts = [v for v in n.vertices if v in keep]
    return ResistorNetwork(verts, [e for e, _ in edges], np.array([m for _, m in edges], dtype=float))


def recurrence_probe(n: ResistorNetwork, v0: int, depth: int,
                     neighbors=None) -> List[float]:
    """RES({v0}, boundary of the combinatorial k-ball) for k = 1..depth.

    Balls use the network's edge graph (zero conductances included) unless a
    neighbor callback is given.
    """
    if neighbors is None:
        adj: Dict[int, List[int]] = {v: [] for v in n.vertices}
        for u, v in n.edges:
            adj[u].append(v)
            adj[v].append(u)
        neighbors = adj.__getitem__
    dist = ball(neighbors, v0, depth)
    trace = []
    for k in range(1, depth + 1):
        inside = {v for v, d in dist.items() if d <= k}
        rim = {v for v, d in dist.items() if d == k}
        if not rim:
            break
        res = effective_resistance(_restrict(n, inside), {v0}, rim).resistance
        trace.append(res if is_unbounded(res) else float(res))
    return trace


def unit_network(edges: Iterable[Edge]) -> ResistorNetwork:
    """All conductances 1."""
    return ResistorNetwork.from_dict({edge_key(*e): 1.0 for e in edges})
