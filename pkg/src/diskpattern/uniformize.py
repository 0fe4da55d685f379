"""Max packings, exhaustion limits, ring-lemma ratios and the deformation
experiment comparing two solved patterns on the same complex."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Sequence

import numpy as np

from .complex import (AngleAssignment, Triangulation, VertexClass, ball, classify_vertices,
                      complete_to_G_tilde, exhaustion)
from .geometry import DiskAutomorphism, Geometry, hyperbolic_center
from .layout import PlacedPattern, layout
from .network import conductances, laplacian_apply
from .solver import HOROCYCLIC, RadiusVector, SolveOptions, SolveReport, solve

log = logging.getLogger(__name__)

TANGENCY_TOL = 1e-6
RING_DRIFT = 0.05
BOUND_SLACK = 1e-6


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, report: Optional[SolveReport] = None):
        super().__init__(message)
        self.report = report


class PreconditionError(ValueError):
    pass


def _checked_solve(t, a, boundary, g, opts=None):
    r, rep = solve(t, a, boundary, g, opts)
    if not rep.converged:
        raise ConvergenceError(f"radius solve stopped at max |K| = {rep.max_residual:.3e}", rep)
    return r, rep


# Max packing ------------------------------------------------------------------


def normalize_at(p: PlacedPattern, v0: int) -> PlacedPattern:
    """Move the hyperbolic center of disk(v0) to the origin."""
    c = hyperbolic_center(p.circle(v0))
    if c == 0:
        return p
    return p.transformed(DiskAutomorphism(c, 0.0))


def tangency_residual(p: PlacedPattern) -> float:
    """max over horocyclic disks of | |center| + radius - 1 |."""
    if not p.horocyclic:
        return 0.0
    return max(abs(abs(p.center(v)) + p.radius(v) - 1.0) for v in p.horocyclic)


def max_pack_hyperbolic(t: Triangulation, a: AngleAssignment, v0: Optional[int] = None,
                        neighbor: Optional[int] = None, opts: Optional[SolveOptions] = None) -> PlacedPattern:
    """All boundary disks horocyclic; disk(v0) centered at 0 in the unit disk."""
    a = complete_to_G_tilde(t, a)
    cls = classify_vertices(t, a)
    interior = sorted(v for v, c in cls.items() if c is VertexClass.INTERIOR)
    if not interior:
        raise PreconditionError("a max packing needs at least one interior vertex")
    if v0 is None:
        v0 = interior[0]
    if cls[v0] is not VertexClass.INTERIOR:
        raise PreconditionError(f"vertex {v0} is a boundary vertex and cannot be centered")
    boundary = {v: HOROCYCLIC for v, c in cls.items() if c is VertexClass.BOUNDARY}
    r, _ = _checked_solve(t, a, boundary, Geometry.HYPERBOLIC, opts)
    if neighbor is None:
        neighbor = min(t.neighbors[v0])
    p = layout(t, a, r, Geometry.HYPERBOLIC, anchor=v0, neighbor=neighbor)
    return normalize_at(p, v0)


# Exhaustion -------------------------------------------------------------------


@dataclass
class TermRecord:
    depth: int
    status: str
    delta: Optional[float] = None
    radii: Dict[int, float] = field(default_factory=dict)
    centers: Dict[int, complex] = field(default_factory=dict)
    interior: List[int] = field(default_factory=list)
    pattern: Optional[PlacedPattern] = None
    note: str = ""

    def to_dict(self, with_disks: bool = True) -> dict:
        out = {"depth": self.depth, "status": self.status, "delta": self.delta, "note": self.note}
        if with_disks:
            out["disks"] = {str(v): {"center": [self.centers[v].real, self.centers[v].imag],
                                     "radius": self.radii[v]} for v in sorted(self.radii)}
        return out


@dataclass
class UniformizationTrace:
    mode: str
    v0: int
    terms: List[TermRecord]
    core: List[int]
    deltas: List[float]
    delta_monotone: Optional[bool]

    @property
    def solved(self) -> List[TermRecord]:
        return [x for x in self.terms if x.status == "ok"]

    @property
    def final(self) -> Optional[PlacedPattern]:
        s = self.solved
        return s[-1].pattern if s else None

    def to_dict(self, with_disks: bool = False) -> dict:
        return {"mode": self.mode, "v0": self.v0, "core": self.core,
                "successive_core_deltas": self.deltas,
                "delta_n": [x.delta for x in self.terms],
                "delta_monotone": self.delta_monotone,
                "terms": [x.to_dict(with_disks) for x in self.terms],
                "note": "trend labels from finite exhaustions, not proofs"}


def _record_hyperbolic(term, v0) -> TermRecord:
    t, a = term.triangulation, term.angles
    cls = classify_vertices(t, a)
    interior = sorted(v for v, c in cls.items() if c is VertexClass.INTERIOR)
    if cls.get(v0) is not VertexClass.INTERIOR:
        return TermRecord(term.depth, "degenerate", note="v0 is not interior; term left unnormalized")
    p = max_pack_hyperbolic(t, a, v0)
    scale = 1.0 / p.radius(v0)
    cs, rs = p.centers_float() * scale, p.radii_float() * scale
    return TermRecord(term.depth, "ok", scale, {v: float(rs[k]) for k, v in enumerate(p.vertices)},
                      {v: complex(cs[k]) for k, v in enumerate(p.vertices)}, interior, p)


def _record_euclidean(term, v0) -> TermRecord:
    t, a = term.triangulation, term.angles
    cls = classify_vertices(t, a)
    interior = sorted(v for v, c in cls.items() if c is VertexClass.INTERIOR)
    if cls.get(v0) is not VertexClass.INTERIOR:
        return TermRecord(term.depth, "degenerate", note="v0 is not interior; term left unnormalized")
    boundary = {v: 1.0 for v, c in cls.items() if c is VertexClass.BOUNDARY}
    r, _ = _checked_solve(t, a, boundary, Geometry.EUCLIDEAN)
    p = layout(t, a, r, Geometry.EUCLIDEAN, anchor=v0, neighbor=min(t.neighbors[v0]))
    scale = 1.0 / p.radius(v0)
    cs = (p.centers_float() - p.center(v0)) * scale
    rs = p.radii_float() * scale
    return TermRecord(term.depth, "ok", None, {v: float(rs[k]) for k, v in enumerate(p.vertices)},
                      {v: complex(cs[k]) for k, v in enumerate(p.vertices)}, interior, p)


def exhaust_uniformize(generator, v0: int, depth: int, mode: str = "hyperbolic", start: int = 2,
                       core_radius: int = 2) -> UniformizationTrace:
    """Normalized patterns on growing balls around v0.

    Hyperbolic mode max-packs each term and rescales by delta_n = 1/rho(P_n(v0));
    euclidean mode uses boundary radius 1 and scales disk(v0) to the unit disk.
    Successive deltas are the largest change of center or radius over the
    vertices within ``core_radius`` of v0.
    """
    if mode not in ("hyperbolic", "euclidean"):
        raise ValueError(f"unknown mode {mode!r}")
    record = _record_hyperbolic if mode == "hyperbolic" else _record_euclidean
    records: List[TermRecord] = []
    for term in exhaustion(generator, v0, depth, start):
        try:
            records.append(record(term, v0))
        except (ConvergenceError, PreconditionError, ArithmeticError) as exc:
            log.warning("term at depth %d failed: %s", term.depth, exc)
            records.append(TermRecord(term.depth, "failed", note=str(exc)))
    ok = [x for x in records if x.status == "ok"]
    core: List[int] = []
    if ok:
        dist = ball(_neighbors_of(ok[0].pattern), v0, core_radius)
        core = sorted(v for v in dist if all(v in x.radii for x in ok))
    deltas = []
    for prev, cur in zip(ok, ok[1:]):
        deltas.append(max(max(abs(cur.centers[v] - prev.centers[v]), abs(cur.radii[v] - prev.radii[v]))
                          for v in core))
    mono = None
    if mode == "hyperbolic":
        ds = [x.delta for x in ok]
        mono = all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(ds, ds[1:]))
    return UniformizationTrace(mode, v0, records, core, deltas, mono)


def _neighbors_of(p: PlacedPattern) -> Callable[[int], List[int]]:
    adj: Dict[int, List[int]] = {v: [] for v in p.vertices}
    for u, v in p.edges:
        if (u, v) in p.completed:
            continue
        adj[u].append(v)
        adj[v].append(u)
    return adj.__getitem__


# Ring lemma -------------------------------------------------------------------


@dataclass
class RingLemmaResult:
    max_ratio: float
    ratios: List[float]
    depths: List[int]
    bounded: bool

    def to_dict(self):
        return dict(self.__dict__)


def ring_lemma_check(trace: UniformizationTrace, v0: Optional[int] = None) -> RingLemmaResult:
    """Largest rho(v0)/rho(v_k) over neighbors v_k, per term.

    Bounded means the last half of the sequence never exceeds its first
    entry by more than 5%.
    """
    v0 = trace.v0 if v0 is None else v0
    ok = trace.solved
    if len(ok) < 3:
        raise PreconditionError("the ring lemma check needs at least three solved terms")
    ratios, depths = [], []
    for rec in ok:
        nbrs = _neighbors_of(rec.pattern)(v0)
        if v0 not in rec.interior or any(w not in rec.interior for w in nbrs):
            raise PreconditionError(f"v0 and its neighbors must be interior at depth {rec.depth}")
        ratios.append(max(rec.radii[v0] / rec.radii[w] for w in nbrs))
        depths.append(rec.depth)
    tail = ratios[len(ratios) // 2:]
    bounded = max(tail) <= (1.0 + RING_DRIFT) * tail[0]
    return RingLemmaResult(max(ratios), ratios, depths, bool(bounded))


# Deformation experiment ----------------------------------------------------------


@dataclass
class DeformationTrace:
    times: np.ndarray
    vertices: List[int]
    boundary: List[int]
    deep_interior: List[int]
    lam: Dict[int, float]
    logratio: np.ndarray
    rate: np.ndarray
    harmonic_residual: np.ndarray
    initial_mismatch: float
    rate_bound_excess: float
    spread: np.ndarray
    core: List[int]
    verdicts: Dict[str, bool]

    def to_dict(self, full: bool = False) -> dict:
        out = {"times": self.times.tolist(),
               "lambda": {str(v): x for v, x in sorted(self.lam.items())},
               "max_abs_lambda": max((abs(x) for x in self.lam.values()), default=0.0),
               "harmonicity_residual": self.harmonic_residual.tolist(),
               "max_harmonicity_residual": float(self.harmonic_residual.max(initial=0.0)),
               "initial_mismatch": self.initial_mismatch,
               "rate_bound_excess": self.rate_bound_excess,
               "core": self.core,
               "interior_spread": self.spread.tolist(),
               "deep_interior_count": len(self.deep_interior),
               "verdicts": self.verdicts}
        if full:
            out["log_ratio"] = {str(v): self.logratio[:, k].tolist() for k, v in enumerate(self.vertices)}
            out["rate"] = {str(v): self.rate[:, k].tolist() for k, v in enumerate(self.vertices)}
        return out


def time_derivative(values: np.ndarray, step: float) -> np.ndarray:
    """Second-order differences along axis 0: central inside, three-point
    one-sided at the ends."""
    n = values.shape[0]
    out = np.empty_like(values)
    if n == 2:
        out[:] = (values[1] - values[0]) / step
        return out
    out[1:-1] = (values[2:] - values[:-2]) / (2 * step)
    out[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * step)
    out[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * step)
    return out


def rigidity_experiment(t: Triangulation, a: AngleAssignment, boundary1: Mapping[int, float],
                        boundary2: Mapping[int, float], time_steps: int = 11, v0: Optional[int] = None,
                        core_radius: int = 1, tol: float = 1e-5) -> DeformationTrace:
    """Deform boundary radii from boundary1 to boundary2 along
    rho(v, t) = exp(lambda(v) t) rho(v) and study the log-radius rates h(v, t)."""
    if time_steps < 2:
        raise ValueError("need at least two time steps")
    a = complete_to_G_tilde(t, a)
    cls = classify_vertices(t, a)
    bnd = sorted(v for v, c in cls.items() if c is VertexClass.BOUNDARY)
    if set(boundary1) != set(bnd) or set(boundary2) != set(bnd):
        raise PreconditionError("both boundary data must cover exactly the boundary vertices")
    lam = {v: math.log(boundary2[v] / boundary1[v]) for v in bnd}
    base, _ = _checked_solve(t, a, dict(boundary1), Geometry.EUCLIDEAN)
    verts = sorted(t.vertices)
    base_log = np.log(base.array(verts))
    times = np.linspace(0.0, 1.0, time_steps)
    step = float(times[1] - times[0])
    logratio = np.empty((time_steps, len(verts)))
    solutions: List[RadiusVector] = []
    prev = None
    for i, tm in enumerate(times):
        bd = {v: boundary1[v] * math.exp(lam[v] * tm) for v in bnd}
        r, _ = _checked_solve(t, a, bd, Geometry.EUCLIDEAN, SolveOptions(initial=prev))
        solutions.append(r)
        prev = dict(r.radii)
        logratio[i] = np.log(r.array(verts)) - base_log
    rate = time_derivative(logratio, step)
    # Boundary rates are lambda exactly; only rounding would change them.
    idx = {v: k for k, v in enumerate(verts)}
    for v in bnd:
        rate[:, idx[v]] = lam[v]

    dist_to_bnd = _distance_to(t, bnd)
    deep = sorted(v for v in verts if dist_to_bnd[v] >= 2)
    resid = np.zeros(time_steps)
    for i, r in enumerate(solutions):
        net = conductances(t, a, r, Geometry.EUCLIDEAN)
        h = {v: float(rate[i, idx[v]]) for v in verts}
        resid[i] = max((abs(laplacian_apply(net, h, v)) for v in deep), default=0.0)

    lam_max = max((abs(x) for x in lam.values()), default=0.0)
    excess = float(np.max(np.abs(rate)) - lam_max)
    if v0 is None:
        interior = sorted(v for v, c in cls.items() if c is VertexClass.INTERIOR)
        v0 = min(interior, key=lambda v: (-dist_to_bnd[v], v)) if interior else verts[0]
    core = sorted(ball(lambda v: t.neighbors[v], v0, core_radius))
    cidx = [idx[v] for v in core]
    spread = rate[:, cidx].max(axis=1) - rate[:, cidx].min(axis=1)
    verdicts = {"harmonic": bool(resid.max(initial=0.0) < tol),
                "rate_bounded": bool(excess <= BOUND_SLACK),
                "starts_at_base_pattern": bool(np.max(np.abs(logratio[0])) < 1e-8)}
    return DeformationTrace(times, verts, bnd, deep, lam, logratio, rate, resid,
                            float(np.max(np.abs(logratio[0]))), excess, spread, core, verdicts)


def _distance_to(t: Triangulation, sources: Sequence[int]) -> Dict[int, int]:
    dist = {v: 0 for v in sources}
    frontier = list(sources)
    while frontier:
        nxt = []
        for u in frontier:
            for w in t.neighbors[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def smooth_profile(t: Triangulation, boundary: Sequence[int], amplitude: float = 0.1,
                   harmonics: Sequence[int] = (1, 2)) -> Dict[int, float]:
    """lambda(v) = amplitude * sum of cos(k * angle) over the boundary cycle,
    using the position hint when present and the cycle order otherwise."""
    pos = t.positions
    if pos is not None and all(v in pos for v in boundary):
        ang = {v: math.atan2(pos[v][1], pos[v][0]) for v in boundary}
    else:
        cyc = t.boundary_cycles[0]
        ang = {v: 2 * math.pi * k / len(cyc) for k, v in enumerate(cyc)}
    return {v: amplitude * sum(math.cos(k * ang[v]) for k in harmonics) / len(harmonics) for v in boundary}


@dataclass
class DepthStudy:
    depths: List[int]
    traces: List[DeformationTrace]
    spreads: List[float]
    decreasing: bool

    def to_dict(self):
        return {"depths": self.depths, "spreads": self.spreads, "decreasing": self.decreasing,
                "traces": [x.to_dict() for x in self.traces]}


def rigidity_depth_study(generator, v0: int, depths: Sequence[int], amplitude: float = 0.1,
                         time_steps: int = 11, constant: Optional[float] = None) -> DepthStudy:
    """Run the deformation on nested balls with the same boundary profile
    shape; the interior spread should shrink as the ball grows.  With
    ``constant`` set, lambda is that constant instead of a profile."""
    traces = []
    for d in depths:
        term = exhaustion(generator, v0, d, start=d)[-1]
        t, a = term.triangulation, term.angles
        cls = classify_vertices(t, a)
        bnd = sorted(v for v, c in cls.items() if c is VertexClass.BOUNDARY)
        lam = ({v: constant for v in bnd} if constant is not None
               else smooth_profile(t, bnd, amplitude))
        b1 = {v: 1.0 for v in bnd}
        b2 = {v: math.exp(lam[v]) for v in bnd}
        traces.append(rigidity_experiment(t, a, b1, b2, time_steps, v0=v0))
    spreads = [float(x.spread.max()) for x in traces]
    dec = all(b < a for a, b in zip(spreads, spreads[1:]))
    return DepthStudy(list(depths), traces, spreads, dec)
