"""Vertex extremal length between vertex sets of a graph.

For a family of paths, an admissible metric gives every path vertex-weighted
length at least 1 (both endpoints count).  The modulus is the least total
squared weight of an admissible metric and the extremal length is its
reciprocal.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.optimize import nnls
from scipy.sparse.csgraph import dijkstra

from .complex import Triangulation, ball
from .network import UNBOUNDED, ResistorNetwork, is_unbounded

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
CG_MAX_VERTICES = 400
SEPARATING_MAX_VERTICES = 16
LOG_ENVELOPE_MIN_SLOPE = 0.02
CAUCHY_TOL = 1e-3
CAUCHY_WINDOW = 5
ANNULUS_CONSTANT = 32.0 + (8.0 * math.pi) ** 2
ANNULUS_DOUBLING_BOUND = 1.0 / (128.0 + (16.0 * math.pi) ** 2)


class PreconditionError(ValueError):
    pass


class SizeLimitError(ValueError):
    pass


def as_graph(source) -> nx.Graph:
    """Accept a networkx graph, a Triangulation, a ResistorNetwork or an edge list."""
    if isinstance(source, nx.Graph):
        return source
    if isinstance(source, Triangulation):
        g = nx.Graph()
        g.add_nodes_from(source.vertices)
        g.add_edges_from(source.edges)
        return g
    if isinstance(source, ResistorNetwork):
        g = nx.Graph()
        g.add_nodes_from(source.vertices)
        g.add_edges_from(source.edges)
        return g
    g = nx.Graph()
    g.add_edges_from(source)
    return g


@dataclass
class VELResult:
    value: object
    metric: Dict[Hashable, float] = field(default_factory=dict)
    area: float = 0.0
    shortest: float = math.inf
    rounds: int = 0
    method: str = ""
    paths: List[List[Hashable]] = field(default_factory=list)

    def to_dict(self) -> dict:
        val = self.value.to_json() if is_unbounded(self.value) else float(self.value)
        return {"vel": val, "mod": 0.0 if is_unbounded(self.value) else self.area,
                "shortest_path_length": None if math.isinf(self.shortest) else self.shortest,
                "rounds": self.rounds, "method": self.method,
                "metric": {str(k): v for k, v in sorted(self.metric.items(), key=lambda kv: str(kv[0]))}}


def _relevant(g: nx.Graph, V1: set, V2: set) -> List[Hashable]:
    """Vertices lying on some V1-V2 path without inner V1 or V2 vertices."""
    inner = g.subgraph([v for v in g.nodes if v not in V1 and v not in V2])
    keep = set(V1 & V2)
    for comp in nx.connected_components(inner):
        touch1 = {u for x in comp for u in g[x] if u in V1}
        touch2 = {u for x in comp for u in g[x] if u in V2}
        if touch1 and touch2:
            keep |= comp | touch1 | touch2
    for u in V1:
        for w in g[u]:
            if w in V2:
                keep.update((u, w))
    return sorted(keep, key=_sort_key)


def _sort_key(v):
    return (str(type(v)), v)


class _PathGraph:
    """Directed arc structure for vertex-weighted shortest paths."""

    def __init__(self, g: nx.Graph, nodes: Sequence[Hashable], V1: set, V2: set):
        self.nodes = list(nodes)
        self.index = {v: k for k, v in enumerate(self.nodes)}
        n = len(self.nodes)
        src, dst = [], []
        for u, w in g.subgraph(self.nodes).edges:
            a, b = self.index[u], self.index[w]
            src += [a, b]
            dst += [b, a]
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.sources = np.array([self.index[v] for v in V1 if v in self.index], dtype=np.int64)
        self.targets = np.array([self.index[v] for v in V2 if v in self.index], dtype=np.int64)
        self.n = n

    def shortest(self, eta: np.ndarray):
        """Distances from the super source (index n) and predecessors."""
        n = self.n
        rows = np.concatenate([self.src, np.full(len(self.sources), n)])
        cols = np.concatenate([self.dst, self.sources])
        w = eta[cols]
        mat = sp.csr_matrix((w, (rows, cols)), shape=(n + 1, n + 1))
        dist, pred = dijkstra(mat, directed=True, indices=n, return_predecessors=True)
        return dist, pred

    def path_to(self, pred, t: int) -> List[int]:
        path = [t]
        while True:
            p = pred[path[-1]]
            if p < 0 or p == self.n:
                break
            path.append(int(p))
        return path[::-1]


def _least_norm(A: np.ndarray) -> np.ndarray:
    """argmin |x| subject to A x >= 1, by nonnegative least squares."""
    m, n = A.shape
    E = np.vstack([A.T, np.ones((1, m))])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (m + n + 1))
    r = E @ u - f
    if abs(r[n]) < 1e-300:
        raise ArithmeticError("path constraints are infeasible")
    return np.maximum(-r[:n] / r[n], 0.0)


def _vel_constraint_generation(pg: _PathGraph, max_rounds: int = 5000, batch: int = 25):
    eta = np.zeros(pg.n)
    rows: List[np.ndarray] = []
    seen = set()
    paths = []
    for rnd in range(1, max_rounds + 1):
        dist, pred = pg.shortest(eta)
        dt = dist[pg.targets]
        best = float(dt.min())
        if best >= 1.0 - FEAS_TOL:
            return eta, best, rnd - 1, paths
        viol = pg.targets[np.argsort(dt)]
        added = 0
        for t in viol:
            if dist[t] >= 1.0 - FEAS_TOL or added >= batch:
                break
            path = pg.path_to(pred, int(t))
            key = tuple(path)
            if key in seen:
                continue
            seen.add(key)
            row = np.zeros(pg.n)
            row[path] = 1.0
            rows.append(row)
            paths.append(path)
            added += 1
        if added == 0:
            raise ArithmeticError("constraint generation stalled on a repeated path")
        eta = _least_norm(np.array(rows))
    raise ArithmeticError("constraint generation did not converge")


def _vel_potential(pg: _PathGraph):
    """Exact convex program with a distance potential phi:
    phi(s) <= eta(s) on V1, phi(w) - phi(u) <= eta(w) on arcs, phi >= 1 on V2."""
    import clarabel

    n = pg.n
    m_arc = len(pg.src)
    ns, nt = len(pg.sources), len(pg.targets)
    P = sp.block_diag([sp.identity(n) * 2.0, sp.csc_matrix((n, n))], format="csc")
    q = np.zeros(2 * n)
    blocks = []
    # -eta <= 0
    blocks.append(sp.hstack([-sp.identity(n), sp.csr_matrix((n, n))]))
    # phi(s) - eta(s) <= 0
    S = sp.csr_matrix((np.ones(ns), (np.arange(ns), pg.sources)), shape=(ns, n))
    blocks.append(sp.hstack([-S, S]))
    # phi(w) - phi(u) - eta(w) <= 0
    Dw = sp.csr_matrix((np.ones(m_arc), (np.arange(m_arc), pg.dst)), shape=(m_arc, n))
    Du = sp.csr_matrix((np.ones(m_arc), (np.arange(m_arc), pg.src)), shape=(m_arc, n))
    blocks.append(sp.hstack([-Dw, Dw - Du]))
    # -phi(t) <= -1
    T = sp.csr_matrix((np.ones(nt), (np.arange(nt), pg.targets)), shape=(nt, n))
    blocks.append(sp.hstack([sp.csr_matrix((nt, n)), -T]))
    A = sp.vstack(blocks, format="csc")
    b = np.concatenate([np.zeros(n + ns + m_arc), -np.ones(nt)])
    sol = None
    for tol in (1e-10, 1e-9, 1e-8):
        settings = clarabel.DefaultSettings()
        settings.verbose = False
        settings.tol_gap_abs = tol
        settings.tol_gap_rel = tol
        settings.tol_feas = tol
        settings.max_iter = 400
        solver = clarabel.DefaultSolver(P, q, A, b, [clarabel.NonnegativeConeT(A.shape[0])], settings)
        sol = solver.solve()
        if str(sol.status) == "Solved":
            break
        log.info("potential program status %s at tol %g", sol.status, tol)
    else:
        raise ArithmeticError(f"potential program failed: {sol.status}")
    eta = np.maximum(np.array(sol.x[:n]), 0.0)
    dist, _ = pg.shortest(eta)
    best = float(dist[pg.targets].min())
    if best <= 0:
        raise ArithmeticError(f"potential program failed: {sol.status}")
    # Rescale so the metric is admissible, making 1/area a certified lower bound.
    if best < 1.0:
        eta = eta / best
        best = 1.0
    return eta, best, int(sol.iterations), []


def vel_between(source, V1: Iterable[Hashable], V2: Iterable[Hashable], method: str = "auto") -> VELResult:
    """Extremal length of the family of paths joining V1 to V2.

    method: "generation" (shortest-path constraint generation with an exact
    least-norm subproblem), "potential" (one convex program with a distance
    potential, for large graphs) or "auto".
    """
    g = as_graph(source)
    V1, V2 = set(V1), set(V2)
    if not V1 or not V2:
        raise ValueError("vertex sets must be nonempty")
    for v in V1 | V2:
        if v not in g:
            raise KeyError(f"vertex {v!r} is not in the graph")
    nodes = _relevant(g, V1, V2)
    if not nodes:
        return VELResult(UNBOUNDED, {}, 0.0, math.inf, 0, "void")
    pg = _PathGraph(g, nodes, V1, V2)
    if method == "auto":
        method = "generation" if pg.n <= CG_MAX_VERTICES else "potential"
    if method == "generation":
        eta, best, rounds, paths = _vel_constraint_generation(pg)
    elif method == "potential":
        eta, best, rounds, paths = _vel_potential(pg)
    else:
        raise ValueError(f"unknown method {method!r}")
    area = float(eta @ eta)
    metric = {v: float(x) for v, x in zip(pg.nodes, eta)}
    return VELResult(1.0 / area, metric, area, best, rounds, method,
                     [[pg.nodes[k] for k in p] for p in paths])


def metric_length(g: nx.Graph, metric: Mapping, path: Sequence) -> float:
    return float(sum(metric.get(v, 0.0) for v in path))


def shortest_metric_length(source, metric: Mapping, V1, V2) -> float:
    """Least vertex-weighted length of a V1-V2 path under the metric."""
    g = as_graph(source)
    V1, V2 = set(V1), set(V2)
    nodes = sorted(g.nodes, key=_sort_key)
    pg = _PathGraph(g, nodes, V1, V2)
    eta = np.array([metric.get(v, 0.0) for v in nodes], dtype=float)
    dist, _ = pg.shortest(eta)
    return float(dist[pg.targets].min())


# Separating families --------------------------------------------------------


def _separates(g: nx.Graph, cut: set, V1: set, V2: set) -> bool:
    rest = g.subgraph([v for v in g.nodes if v not in cut])
    starts = [v for v in V1 if v not in cut]
    seen = set(starts)
    stack = list(starts)
    while stack:
        u = stack.pop()
        if u in V2:
            return False
        for w in rest[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return True


def minimal_separating_sets(source, V1, V2, include_terminals: bool = True) -> List[frozenset]:
    """All inclusion-minimal vertex sets meeting every V1-V2 path.

    By default sets may contain vertices of V1 or V2, which is the family dual
    to the joining paths.  With include_terminals=False only vertices outside
    V1 and V2 are used.  Exponential: small graphs only.
    """
    g = as_graph(source)
    V1, V2 = set(V1), set(V2)
    nodes = sorted(g.nodes, key=_sort_key)
    if not include_terminals:
        nodes = [v for v in nodes if v not in V1 and v not in V2]
    if len(nodes) > SEPARATING_MAX_VERTICES:
        raise SizeLimitError(f"{len(nodes)} vertices exceed the enumeration limit "
                             f"{SEPARATING_MAX_VERTICES}; use vel_between and duality instead")
    found: List[frozenset] = []
    for size in range(len(nodes) + 1):
        for combo in itertools.combinations(nodes, size):
            cut = frozenset(combo)
            if any(f <= cut for f in found):
                continue
            if _separates(g, set(cut), V1, V2):
                found.append(cut)
    return found


@dataclass
class ModResult:
    value: object
    metric: Dict[Hashable, float]
    families: int


def mod_separating(source, V1, V2, include_terminals: bool = True) -> ModResult:
    """Modulus of the family of vertex sets separating V1 from V2.

    If the empty set separates (no joining path), no metric is admissible and
    the modulus is UNBOUNDED.  A void family has modulus 0.
    """
    g = as_graph(source)
    cuts = minimal_separating_sets(g, V1, V2, include_terminals)
    if any(len(c) == 0 for c in cuts):
        return ModResult(UNBOUNDED, {}, len(cuts))
    if not cuts:
        return ModResult(0.0, {}, 0)
    nodes = sorted({v for c in cuts for v in c}, key=_sort_key)
    idx = {v: k for k, v in enumerate(nodes)}
    A = np.zeros((len(cuts), len(nodes)))
    for i, c in enumerate(cuts):
        for v in c:
            A[i, idx[v]] = 1.0
    eta = _least_norm(A)
    return ModResult(float(eta @ eta), {v: float(eta[idx[v]]) for v in nodes}, len(cuts))


# Serial rule ----------------------------------------------------------------


@dataclass
class SerialResult:
    lhs: object
    rhs: float
    passed: bool
    terms: List[float]


def serial_lower_bound(source, sets: Sequence[Iterable[Hashable]], tol: float = 1e-8) -> SerialResult:
    """Check VEL(V_1, V_2m) >= sum_i VEL(V_{2i-1}, V_{2i}) for nested sets."""
    g = as_graph(source)
    sets = [set(s) for s in sets]
    if len(sets) % 2 or not sets:
        raise ValueError("need an even, nonzero number of vertex sets")
    for i1, i2, i3 in itertools.combinations(range(len(sets)), 3):
        if not _separates(g, sets[i2], sets[i1], sets[i3]):
            raise PreconditionError(f"set {i2 + 1} does not separate sets {i1 + 1} and {i3 + 1}")
    lhs = vel_between(g, sets[0], sets[-1]).value
    terms = []
    for i in range(0, len(sets), 2):
        terms.append(vel_between(g, sets[i], sets[i + 1]).value)
    if any(is_unbounded(x) for x in terms):
        return SerialResult(lhs, math.inf, is_unbounded(lhs), [math.inf if is_unbounded(x) else x for x in terms])
    rhs = float(sum(terms))
    ok = is_unbounded(lhs) or lhs >= rhs - tol
    return SerialResult(lhs, rhs, bool(ok), terms)


# Patterns and annuli ------------------------------------------------------------


def circle_hit_set(p, radius: float, center: complex = 0j) -> set:
    """Vertices whose disk meets the circle |z - center| = radius."""
    cs = p.centers_float() - center
    rs = p.radii_float()
    hit = np.abs(np.abs(cs) - radius) <= rs
    return {v for v, h in zip(p.vertices, hit) if h}


def _lens_diameter(c: complex, rho: float, big: float) -> float:
    """Diameter of the intersection of the disk (c, rho) with the disk |z| <= big."""
    d = abs(c)
    if d + rho <= big:
        return 2.0 * rho
    if d - rho >= big:
        return 0.0
    if d + big <= rho:
        return 2.0 * big
    # Chord of the two circles and possibly the disk's own diameter.
    s = (d * d + rho * rho - big * big) / (2.0 * d)
    if s <= 0:
        return 2.0 * rho
    chord = 2.0 * math.sqrt(max(rho * rho - s * s, 0.0))
    # When the big disk's own diameter fits in the lens it can be longer still.
    t = (d * d + big * big - rho * rho) / (2.0 * d)
    if t <= 0:
        chord = max(chord, 2.0 * big)
    return chord


@dataclass
class AnnulusResult:
    vel: float
    bound: float
    passed: bool
    doubling_bound: Optional[float]
    doubling_passed: Optional[bool]
    witness_area: float
    witness_area_bound: float
    witness_shortest: float
    sizes: Tuple[int, int]

    def to_dict(self):
        return dict(self.__dict__)


def annulus_bound_check(p, r1: float, r2: float, center: complex = 0j, method: str = "auto") -> AnnulusResult:
    """Compare VEL between circle-hit sets with the annulus lower bound."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    A = circle_hit_set(p, r1, center)
    B = circle_hit_set(p, r2, center)
    if not A or not B:
        raise PreconditionError("a circle-hit set is empty")
    if A & B:
        raise PreconditionError("circle-hit sets overlap")
    g = nx.Graph()
    g.add_nodes_from(p.vertices)
    g.add_edges_from(p.edges)
    res = vel_between(g, A, B, method=method)
    vel = math.inf if is_unbounded(res.value) else float(res.value)
    bound = (r2 - r1) ** 2 / (ANNULUS_CONSTANT * r2 * r2)
    dbl = ANNULUS_DOUBLING_BOUND if r2 >= 2 * r1 else None
    cs = p.centers_float() - center
    rs = p.radii_float()
    witness = {v: _lens_diameter(complex(c), float(r), r2) / (r2 - r1) for v, c, r in zip(p.vertices, cs, rs)}
    w_area = float(sum(x * x for x in witness.values()))
    w_short = shortest_metric_length(g, witness, A, B)
    return AnnulusResult(vel, bound, vel >= bound, dbl, None if dbl is None else vel >= dbl,
                         w_area, ANNULUS_CONSTANT * r2 * r2 / (r2 - r1) ** 2, w_short, (len(A), len(B)))


# Type evidence ----------------------------------------------------------------


PARABOLIC = "VEL-parabolic-evidence"
HYPERBOLIC = "VEL-hyperbolic-evidence"
INCONCLUSIVE = "inconclusive"


@dataclass
class ClassifyResult:
    verdict: str
    trace: List[float]
    depths: List[int]
    increments: List[float]
    thresholds: Dict[str, object]
    note: str = ("finite-depth evidence from VEL({v0}, boundary of the k-ball); "
                 "not a decision procedure")

    def to_dict(self):
        return dict(self.__dict__)


def vel_trace(generator, v0: Hashable, depth: int, start: int = 1, method: str = "auto") -> List[float]:
    """VEL({v0}, boundary of the combinatorial k-ball) for k = start..depth."""
    from .generators import as_generator

    gen = as_generator(generator)
    gen.ensure_depth(v0, depth)
    dist = ball(gen.neighbors, v0, depth)
    out = []
    for k in range(start, depth + 1):
        inside = [v for v, d in dist.items() if d <= k]
        g = nx.Graph()
        g.add_nodes_from(inside)
        keep = set(inside)
        for u in inside:
            if dist[u] < k:
                g.add_edges_from((u, w) for w in gen.neighbors(u) if w in keep)
        rim = {v for v in inside if dist[v] == k}
        out.append(float(vel_between(g, {v0}, rim, method=method).value))
    return out


def classify_trace(trace: Sequence[float], depths: Sequence[int]) -> Tuple[str, List[float]]:
    inc = [b - a for a, b in zip(trace, trace[1:])]
    if len(inc) >= CAUCHY_WINDOW and max(inc[-CAUCHY_WINDOW:]) < CAUCHY_TOL:
        return HYPERBOLIC, inc
    # Log envelope: k * (increment at k) stays bounded below over the second
    # half of the window, so the trace grows at least like a multiple of log k.
    half = inc[len(inc) // 2:]
    ks = list(depths[1:])[len(inc) // 2:]
    if half and min(k * d for k, d in zip(ks, half)) >= LOG_ENVELOPE_MIN_SLOPE:
        return PARABOLIC, inc
    return INCONCLUSIVE, inc


def type_classify(generator, v0: Hashable, depth: int, start: int = 1, method: str = "auto") -> ClassifyResult:
    """Finite-depth evidence for the VEL type of an infinite graph."""
    trace = vel_trace(generator, v0, depth, start, method)
    depths = list(range(start, start + len(trace)))
    verdict, inc = classify_trace(trace, depths)
    thresholds = {"cauchy_increment": CAUCHY_TOL, "cauchy_window": CAUCHY_WINDOW,
                  "log_envelope_min_k_times_increment": LOG_ENVELOPE_MIN_SLOPE,
                  "rule": ("hyperbolic-evidence if the last 5 increments are all below 1e-3; "
                           "parabolic-evidence if k * increment(k) >= 0.02 on the second half "
                           "of the window; otherwise inconclusive")}
    return ClassifyResult(verdict, trace, depths, inc, thresholds)
