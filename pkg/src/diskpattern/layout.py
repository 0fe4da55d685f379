"""Place solved disk patterns in the plane or the unit disk, and check them."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .complex import AngleAssignment, Edge, Triangulation, complete_to_G_tilde, detect_reducible_edges, edge_key
from .geometry import (Circle, DiskAutomorphism, Geometry, GeometryLike, as_geometry, center_distance,
                       circle_from_hyperbolic, dihedral_from_distance, horocycle_at, hyperbolic_center,
                       mobius_on_circle, triple_angles)
from .solver import PatternSystem, RadiusVector, extended_logradii

LAYOUT_TOL = 1e-6
REFINE_EVERY = 64


class LayoutError(RuntimeError):
    pass


@dataclass
class PlacedPattern:
    """Disk centers and euclidean radii, either in the plane or in the unit disk.

    Coordinates are kept in extended precision for euclidean layouts so that
    tangencies can be checked far below float64 rounding.
    """

    geometry: Geometry
    vertices: List[int]
    centers: np.ndarray
    radii: np.ndarray
    edges: List[Edge]
    theta: Dict[Edge, float]
    completed: FrozenSet[Edge] = frozenset()
    order: List[Tuple[int, Optional[int], Optional[int]]] = field(default_factory=list)
    horocyclic: FrozenSet[int] = frozenset()
    hyperbolic_radii: Optional[Dict[int, float]] = None

    def __post_init__(self):
        self.index = {v: k for k, v in enumerate(self.vertices)}

    def center(self, v) -> complex:
        return complex(self.centers[self.index[v]])

    def radius(self, v) -> float:
        return float(self.radii[self.index[v]])

    def circle(self, v) -> Circle:
        return Circle(self.center(v), self.radius(v))

    def centers_float(self) -> np.ndarray:
        return self.centers.astype(np.complex128)

    def radii_float(self) -> np.ndarray:
        return self.radii.astype(np.float64)

    def reduced_edges(self) -> List[Edge]:
        return [e for e in self.edges if e not in self.completed]

    def transformed(self, m: DiskAutomorphism) -> "PlacedPattern":
        """Image under a unit-disk automorphism (disk-model patterns only)."""
        cs, rs = [], []
        for v in self.vertices:
            img = mobius_on_circle(m, self.circle(v))
            cs.append(img.center)
            rs.append(img.radius)
        return PlacedPattern(self.geometry, list(self.vertices), np.array(cs, dtype=complex),
                             np.array(rs, dtype=float), list(self.edges), dict(self.theta),
                             self.completed, list(self.order), self.horocyclic, self.hyperbolic_radii)

    def to_dict(self) -> dict:
        cs = self.centers_float()
        rs = self.radii_float()
        out = {"geometry": self.geometry.value,
               "disks": [{"vertex": v, "center": [float(cs[k].real), float(cs[k].imag)],
                          "radius": float(rs[k]), "horocyclic": v in self.horocyclic}
                         for k, v in enumerate(self.vertices)],
               "edges": [{"edge": list(e), "theta": self.theta[e], "completed": e in self.completed}
                         for e in self.edges],
               "order": [list(x) for x in self.order]}
        if self.hyperbolic_radii is not None:
            out["hyperbolic_radii"] = {str(v): r for v, r in sorted(self.hyperbolic_radii.items())}
        return out


def _rotated(face, w):
    a, b, c = face
    if w == a:
        return b, c, a
    if w == b:
        return c, a, b
    return a, b, c


def _face_queue_layout(t: Triangulation, start: Sequence[int], place) -> List[Tuple[int, int, int]]:
    """Breadth-first face propagation.

    ``place(p, q, w, k, fallback)`` puts w given the ccw face (p, q, w) and
    returns False if it declines; declined vertices are retried with
    ``fallback=True`` once the queue runs dry.  Returns the placement order.
    """
    placed = set(start)
    order = []
    queue = deque(k for v in start for k in t.vertex_faces[v])

    def third(k):
        f = t.faces[k]
        todo = [x for x in f if x not in placed]
        if len(todo) != 1:
            return None
        return _rotated(f, todo[0])

    def accept(w, p, q):
        placed.add(w)
        order.append((w, p, q))
        queue.extend(t.vertex_faces[w])

    while True:
        while queue:
            k = queue.popleft()
            pqw = third(k)
            if pqw and place(*pqw, k, False):
                accept(pqw[2], pqw[0], pqw[1])
        if len(placed) == len(t.vertices):
            break
        for k in range(len(t.faces)):
            pqw = third(k)
            if pqw and place(*pqw, k, True):
                accept(pqw[2], pqw[0], pqw[1])
                break
        else:
            break
    missing = [v for v in t.vertices if v not in placed]
    if missing:
        raise LayoutError(f"could not place vertices {missing[:10]}")
    return order


def layout(t: Triangulation, a: AngleAssignment, r: RadiusVector, g: GeometryLike = Geometry.EUCLIDEAN,
           anchor: Optional[int] = None, neighbor: Optional[int] = None, extended: bool = True) -> PlacedPattern:
    """Lay out a solved pattern by propagating across faces from an anchor.

    Euclidean: the anchor is placed at the origin and ``neighbor`` on the
    positive real axis.  Hyperbolic: the anchor disk is centered at 0 in the
    unit disk and ``neighbor`` lies in the direction of the positive real axis.
    """
    g = as_geometry(g)
    a = complete_to_G_tilde(t, a)
    sysm = PatternSystem(t, a, g)
    logr = np.log(r.array(sysm.vertices))
    if len(sysm.int_idx):
        res = float(np.max(np.abs(sysm.curvature(logr))))
        if res > LAYOUT_TOL:
            raise LayoutError(f"curvature residual {res:.3e} exceeds the layout tolerance {LAYOUT_TOL}")
    if anchor is None:
        anchor = sysm.interior[0] if (g is Geometry.HYPERBOLIC and sysm.interior) else sysm.vertices[0]
    if neighbor is None:
        neighbor = t.neighbors[anchor][0]
    elif edge_key(anchor, neighbor) not in t.edge_set:
        raise ValueError("anchor neighbor must share an edge with the anchor")
    if g is Geometry.EUCLIDEAN:
        return _layout_euclidean(t, a, sysm, r, anchor, neighbor, extended)
    return _layout_hyperbolic(t, a, sysm, r, anchor, neighbor)


def _edge_data(t, a):
    edges = sorted(set(t.edges) | set(a.completed_edges))
    return edges, {e: a.theta_tilde[e] for e in edges}


def _layout_euclidean(t, a, sysm, r, anchor, neighbor, extended):
    dtype = np.longdouble if extended else np.float64
    ctype = np.clongdouble if extended else np.complex128
    if extended:
        logr = extended_logradii(sysm, r)
    else:
        logr = np.log(r.array(sysm.vertices))
    radii = np.exp(logr.astype(dtype))
    faces = sysm.faces
    th = sysm.face_theta
    phi = np.stack(triple_angles((radii[faces[:, 0]], radii[faces[:, 1]], radii[faces[:, 2]]),
                                 (th[:, 0], th[:, 1], th[:, 2])), axis=1)
    idx = sysm.index
    tt = a.theta_tilde
    centers = np.full(len(sysm.vertices), np.nan, dtype=ctype)

    def dist(u, v):
        return center_distance(radii[idx[u]], radii[idx[v]], dtype(tt[edge_key(u, v)]))

    centers[idx[anchor]] = 0
    centers[idx[neighbor]] = dist(anchor, neighbor)
    count = [0]

    def place(p, q, w, k, fallback):
        f = t.faces[k]
        corner = f.index(p)
        ap, aq = centers[idx[p]], centers[idx[q]]
        u = (aq - ap) / abs(aq - ap)
        ang = phi[k, corner]
        rot = np.cos(ang) + 1j * np.sin(ang)
        centers[idx[w]] = ap + dist(p, w) * u * rot.astype(ctype)
        count[0] += 1
        if count[0] % REFINE_EVERY == 0:
            _refine(w)
        return True

    def _refine(w):
        nbrs = [x for x in t.neighbors[w] if not np.isnan(centers[idx[x]].real)]
        if len(nbrs) < 2:
            return
        z = centers[idx[w]]
        target = np.array([dist(w, x) for x in nbrs], dtype=dtype)
        pts = np.array([centers[idx[x]] for x in nbrs], dtype=ctype)
        for _ in range(2):
            diff = z - pts
            lens = np.abs(diff)
            res = lens - target
            jac = np.stack([diff.real / lens, diff.imag / lens], axis=1)
            step = np.linalg.lstsq(jac.astype(float), -res.astype(float), rcond=None)[0]
            z = z + (dtype(step[0]) + 1j * dtype(step[1]))
        centers[idx[w]] = z

    order = _face_queue_layout(t, (anchor, neighbor), place)
    edges, theta = _edge_data(t, a)
    return PlacedPattern(Geometry.EUCLIDEAN, list(sysm.vertices), centers, radii, edges, theta,
                         a.completed_edges, [(anchor, None, None), (neighbor, anchor, None)] + order)


def hyperbolic_distance(z1: complex, z2: complex) -> float:
    return 2.0 * math.atanh(abs(z1 - z2) / abs(1.0 - z1.conjugate() * z2))


def _layout_hyperbolic(t, a, sysm, r, anchor, neighbor):
    horo = set(r.horocyclic)
    if anchor in horo:
        raise LayoutError("the anchor disk must have finite hyperbolic radius")
    R = {v: r[v] for v in sysm.vertices}
    faces = sysm.faces
    th = sysm.face_theta
    radii = np.array([R[v] for v in sysm.vertices])
    phi = np.stack(triple_angles((radii[faces[:, 0]], radii[faces[:, 1]], radii[faces[:, 2]]),
                                 (th[:, 0], th[:, 1], th[:, 2]), Geometry.HYPERBOLIC), axis=1)
    tt = a.theta_tilde
    circles: Dict[int, Circle] = {}

    def disk_in_frame(direction, pivot, w):
        theta = tt[edge_key(pivot, w)]
        if w in horo:
            return horocycle_at(direction, math.tanh(0.5 * R[pivot]), theta)
        D = float(center_distance(R[pivot], R[w], theta, Geometry.HYPERBOLIC))
        return circle_from_hyperbolic(direction, D, R[w])

    circles[anchor] = Circle(0j, math.tanh(0.5 * R[anchor]))
    circles[neighbor] = disk_in_frame(1.0 + 0j, anchor, neighbor)

    def place(p, q, w, k, fallback):
        f = t.faces[k]
        options = []
        if p not in horo:
            options.append((p, q, +1))
        if q not in horo:
            options.append((q, p, -1))
        if not options:
            if not fallback:
                return False
            circles[w] = _horocycle_from_two(circles[p], circles[q], tt[edge_key(p, w)],
                                             tt[edge_key(q, w)])
            return True
        pivot, other, sign = min(options, key=lambda o: abs(circles[o[0]].center))
        ac = hyperbolic_center(circles[pivot])
        frame = DiskAutomorphism(ac, 0.0)
        img = mobius_on_circle(frame, circles[other])
        base = img.center / abs(img.center)
        ang = phi[k, f.index(pivot)]
        direction = base * complex(math.cos(ang), sign * math.sin(ang))
        circles[w] = mobius_on_circle(frame.inverse(), disk_in_frame(direction, pivot, w))
        return True

    order = _face_queue_layout(t, (anchor, neighbor), place)
    edges, theta = _edge_data(t, a)
    centers = np.array([circles[v].center for v in sysm.vertices], dtype=complex)
    eradii = np.array([circles[v].radius for v in sysm.vertices], dtype=float)
    hyp = {v: (math.inf if v in horo else float(R[v])) for v in sysm.vertices}
    return PlacedPattern(Geometry.HYPERBOLIC, list(sysm.vertices), centers, eradii, edges, theta,
                         a.completed_edges, [(anchor, None, None), (neighbor, anchor, None)] + order,
                         frozenset(horo), hyp)


def _horocycle_from_two(c1: Circle, c2: Circle, theta1: float, theta2: float) -> Circle:
    """Horocycle meeting two placed circles at the given angles (ccw side)."""
    from scipy.optimize import fsolve

    def eqs(x):
        psi, logrr = x
        rr = math.exp(logrr)
        c = (1 - rr) * complex(math.cos(psi), math.sin(psi))
        e1 = abs(c - c1.center) ** 2 - (rr ** 2 + c1.radius ** 2 + 2 * rr * c1.radius * math.cos(theta1))
        e2 = abs(c - c2.center) ** 2 - (rr ** 2 + c2.radius ** 2 + 2 * rr * c2.radius * math.cos(theta2))
        return [e1, e2]

    mid = c1.center + c2.center
    psi0 = math.atan2(mid.imag, mid.real) if abs(mid) > 0 else 0.0
    # Try both sides of the chord and keep the counterclockwise solution.
    best = None
    for dpsi in (0.5, -0.5, 1.0, -1.0, 2.0, -2.0):
        sol, info, ier, _ = fsolve(eqs, [psi0 + dpsi, math.log(0.5 * min(c1.radius, c2.radius))],
                                   full_output=True)
        if ier == 1:
            rr = math.exp(sol[1])
            c = (1 - rr) * complex(math.cos(sol[0]), math.sin(sol[0]))
            orient = ((c2.center - c1.center).conjugate() * (c - c1.center)).imag
            if orient > 0:
                best = Circle(c, rr)
                break
    if best is None:
        raise LayoutError("could not place a horocycle between two horocycles")
    return best


# Verification ---------------------------------------------------------------


def _pair_arrays(p: PlacedPattern, edges):
    iu = np.array([p.index[u] for u, _ in edges], dtype=np.int64)
    iv = np.array([p.index[v] for _, v in edges], dtype=np.int64)
    return iu, iv


def holonomy_residual(p: PlacedPattern, t: Optional[Triangulation] = None,
                      a: Optional[AngleAssignment] = None) -> float:
    """Largest mismatch between placed and prescribed center distances.

    Every edge of the completed graph is included, so edges that close
    cycles of the placement tree are tested too.  In the unit disk only pairs
    of finite disks are measured (hyperbolic distance between their centers).
    """
    edges = p.edges if a is None else sorted(set((t.edges if t is not None else ())) | set(a.completed_edges))
    theta = p.theta if a is None else a.theta_tilde
    if not edges:
        return 0.0
    if p.geometry is Geometry.EUCLIDEAN:
        iu, iv = _pair_arrays(p, edges)
        th = np.array([theta[e] for e in edges], dtype=p.radii.dtype)
        want = center_distance(p.radii[iu], p.radii[iv], th)
        got = np.abs(p.centers[iu] - p.centers[iv])
        return float(np.max(np.abs(got - want)))
    worst = 0.0
    for u, v in edges:
        if u in p.horocyclic or v in p.horocyclic:
            continue
        zu, zv = hyperbolic_center(p.circle(u)), hyperbolic_center(p.circle(v))
        got = hyperbolic_distance(zu, zv)
        want = float(center_distance(p.hyperbolic_radii[u], p.hyperbolic_radii[v], theta[(u, v)],
                                     Geometry.HYPERBOLIC))
        worst = max(worst, abs(got - want))
    return worst


def recovered_angles(p: PlacedPattern) -> Dict[Edge, float]:
    iu, iv = _pair_arrays(p, p.edges)
    ang = dihedral_from_distance(p.radii[iu], p.radii[iv], np.abs(p.centers[iu] - p.centers[iv]))
    return {e: float(x) for e, x in zip(p.edges, np.atleast_1d(ang))}


def verify_angles(p: PlacedPattern, a: Optional[AngleAssignment] = None) -> float:
    """Largest difference between recovered and prescribed dihedral angles."""
    theta = p.theta if a is None else a.theta_tilde
    if not p.edges:
        return 0.0
    rec = recovered_angles(p)
    return max(abs(rec[e] - theta[e]) for e in p.edges)


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return ((b - a).conjugate() * (c - a)).imag

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass
class CrossingReport:
    crossings: List[Tuple[Edge, Edge]]
    all_reducible: bool
    unexplained: List[Tuple[Edge, Edge]]

    def to_dict(self):
        return {"crossings": [[list(e), list(f)] for e, f in self.crossings],
                "all_reducible": self.all_reducible,
                "unexplained": [[list(e), list(f)] for e, f in self.unexplained]}


def detect_reducible_crossings(p: PlacedPattern, t: Triangulation, a: AngleAssignment,
                               edges: Optional[Sequence[Edge]] = None) -> CrossingReport:
    """Pairs of center segments that cross, and whether each pair consists of
    the two diagonals of one reducible configuration."""
    a = complete_to_G_tilde(t, a)
    edges = list(p.edges if edges is None else edges)
    reducible = detect_reducible_edges(t, a)
    cs = p.centers
    seg = [(cs[p.index[u]], cs[p.index[v]]) for u, v in edges]
    xs = [(min(s[0].real, s[1].real), max(s[0].real, s[1].real)) for s in seg]
    order = sorted(range(len(edges)), key=lambda k: xs[k][0])
    crossings = []
    active: List[int] = []
    for k in order:
        lo = xs[k][0]
        active = [m for m in active if xs[m][1] >= lo]
        for m in active:
            e, f = edges[m], edges[k]
            if set(e) & set(f):
                continue
            if _segments_cross(seg[m][0], seg[m][1], seg[k][0], seg[k][1]):
                crossings.append(tuple(sorted((e, f))))
        active.append(k)
    crossings.sort()
    nbr = {v: set(t.neighbors[v]) for v in t.vertices}
    unexplained = []
    for e, f in crossings:
        ok = e in reducible and f in reducible
        if ok:
            (x, y), (u, v) = e, f
            ok = all(w in nbr[z] for z in (x, y) for w in (u, v))
        if not ok:
            unexplained.append((e, f))
    return CrossingReport(crossings, not unexplained, unexplained)


def centers_outside_check(p: PlacedPattern, tol: float = 1e-9) -> Tuple[bool, float]:
    """Each center lies outside every other disk; returns (pass, worst margin)."""
    cs = p.centers_float()
    rs = p.radii_float()
    n = len(cs)
    worst = math.inf
    block = 512
    for s in range(0, n, block):
        d = np.abs(cs[s:s + block, None] - cs[None, :])
        margin = d - rs[None, :]
        for k in range(min(block, n - s)):
            margin[k, s + k] = math.inf
        worst = min(worst, float(margin.min()))
    return worst >= -tol, worst


def cover_count(p: PlacedPattern, samples: int = 200, seed: int = 0) -> int:
    """Largest number of disks covering a sample point (grid plus jitter)."""
    cs = p.centers_float()
    rs = p.radii_float()
    lo = complex(np.min(cs.real - rs), np.min(cs.imag - rs))
    hi = complex(np.max(cs.real + rs), np.max(cs.imag + rs))
    xs = np.linspace(lo.real, hi.real, samples)
    ys = np.linspace(lo.imag, hi.imag, samples)
    rng = np.random.default_rng(seed)
    pts = (xs[:, None] + 1j * ys[None, :]).ravel()
    pts = np.concatenate([pts, lo.real + (hi.real - lo.real) * rng.random(samples * samples)
                          + 1j * (lo.imag + (hi.imag - lo.imag) * rng.random(samples * samples))])
    worst = 0
    for s in range(0, len(pts), 4096):
        d = np.abs(pts[s:s + 4096, None] - cs[None, :])
        worst = max(worst, int(np.max(np.sum(d <= rs[None, :] * (1 + 1e-12), axis=1))))
    return worst


def geometric_conductances(p: PlacedPattern, t: Triangulation) -> Dict[Edge, float]:
    """Edge weights |O O'| / |A_u A_v| from the radical points O, O' of the two
    faces on an interior edge (euclidean layouts)."""
    cs = p.centers
    rs = p.radii

    def radical(f):
        z = [cs[p.index[x]] for x in f]
        r2 = [rs[p.index[x]] ** 2 for x in f]
        # |O - z_i|^2 - r_i^2 equal for all i: two linear equations.
        rows, rhs = [], []
        for i in (1, 2):
            d = z[i] - z[0]
            rows.append([2 * d.real, 2 * d.imag])
            rhs.append(abs(z[i]) ** 2 - abs(z[0]) ** 2 - r2[i] + r2[0])
        A = np.array(rows, dtype=np.longdouble)
        b = np.array(rhs, dtype=np.longdouble)
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        x = (b[0] * A[1, 1] - b[1] * A[0, 1]) / det
        y = (A[0, 0] * b[1] - A[1, 0] * b[0]) / det
        return x + 1j * y

    ofs = [radical(f) for f in t.faces]
    out = {}
    for e, fs in t.edge_faces.items():
        if len(fs) != 2:
            continue
        u, v = e
        out[e] = float(abs(ofs[fs[0]] - ofs[fs[1]]) / abs(cs[p.index[u]] - cs[p.index[v]]))
    return out
