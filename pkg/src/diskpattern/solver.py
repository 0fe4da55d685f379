"""Curvature, its Jacobian, and the boundary-value solve for disk radii."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq

from .complex import (AngleAssignment, Triangulation, VertexClass, check_c1_c2,
                      classify_vertices, complete_to_G_tilde, edge_key)
from .geometry import (DegenerateTriangleError, Geometry, GeometryLike, angle_jacobian,
                       as_geometry, triple_angles)

log = logging.getLogger(__name__)

HOROCYCLIC = "horocyclic"
R_CAP = 40.0
DEFAULT_TOL = {Geometry.EUCLIDEAN: 1e-10, Geometry.HYPERBOLIC: 1e-8}
# Newton keeps polishing a converged solution until this residual.
POLISH_TOL = 1e-13
MAX_HALVINGS = 30


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class RadiusVector:
    """Radii per vertex; horocyclic vertices carry the capped radius R_CAP."""

    radii: Mapping[int, float]
    horocyclic: FrozenSet[int] = frozenset()

    def __getitem__(self, v: int) -> float:
        return self.radii[v]

    def __contains__(self, v) -> bool:
        return v in self.radii

    def __len__(self):
        return len(self.radii)

    def array(self, order) -> np.ndarray:
        return np.array([self.radii[v] for v in order], dtype=float)

    def to_dict(self) -> Dict[str, Union[float, str]]:
        return {str(v): (HOROCYCLIC if v in self.horocyclic else float(r))
                for v, r in sorted(self.radii.items())}

    @classmethod
    def from_mapping(cls, data: Mapping[int, Union[float, str]], r_cap: float = R_CAP) -> "RadiusVector":
        radii, horo = {}, set()
        for v, r in data.items():
            v = int(v)
            if isinstance(r, str):
                if r != HOROCYCLIC:
                    raise ValueError(f"unknown radius marker {r!r}")
                radii[v] = r_cap
                horo.add(v)
            else:
                r = float(r)
                if not (r > 0 and math.isfinite(r)):
                    raise ValueError(f"radius of vertex {v} must be positive, got {r}")
                radii[v] = r
        return cls(radii, frozenset(horo))


@dataclass
class SolveOptions:
    tol: Optional[float] = None
    max_iter: int = 200
    r_cap: float = R_CAP
    polish: bool = True
    initial: Optional[Mapping[int, float]] = None


@dataclass
class SolveReport:
    iterations: int
    max_residual: float
    damping: List[float]
    converged: bool
    tol: float
    geometry: str
    relaxation_sweeps: int = 0
    residuals: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "max_residual": self.max_residual,
                "damping": self.damping, "converged": self.converged, "tol": self.tol,
                "geometry": self.geometry, "relaxation_sweeps": self.relaxation_sweeps,
                "residuals": self.residuals}


class PatternSystem:
    """Index structure for evaluating curvature on a fixed complex."""

    def __init__(self, t: Triangulation, a: AngleAssignment, g: GeometryLike = Geometry.EUCLIDEAN):
        self.t = t
        self.a = complete_to_G_tilde(t, a)
        self.g = as_geometry(g)
        self.vertices = list(t.vertices)
        self.index = {v: k for k, v in enumerate(self.vertices)}
        missing = self.a.missing_edges(t)
        if missing:
            raise ValueError(f"no angle given for edges {missing[:5]}")
        self.faces = np.array([[self.index[x] for x in f] for f in t.faces], dtype=np.int64).reshape(-1, 3)
        th = self.a.theta_tilde
        self.face_theta = np.array([[th[edge_key(a_, b_)], th[edge_key(a_, c_)], th[edge_key(b_, c_)]]
                                    for a_, b_, c_ in t.faces], dtype=float).reshape(-1, 3)
        cls = classify_vertices(t, self.a)
        self.classes = cls
        self.interior = [v for v in self.vertices if cls[v] is VertexClass.INTERIOR]
        self.boundary = [v for v in self.vertices if cls[v] is VertexClass.BOUNDARY]
        self.int_idx = np.array([self.index[v] for v in self.interior], dtype=np.int64)
        self.bnd_idx = np.array([self.index[v] for v in self.boundary], dtype=np.int64)
        self.row_of = -np.ones(len(self.vertices), dtype=np.int64)
        self.row_of[self.int_idx] = np.arange(len(self.int_idx))
        self.vertex_face_slots: List[List[Tuple[int, int]]] = [[] for _ in self.vertices]
        for k, f in enumerate(self.faces):
            for corner, vi in enumerate(f):
                self.vertex_face_slots[vi].append((k, corner))

    def _face_args(self, logr, faces=None):
        f = self.faces if faces is None else self.faces[faces]
        th = self.face_theta if faces is None else self.face_theta[faces]
        r = np.exp(logr)
        return (r[f[:, 0]], r[f[:, 1]], r[f[:, 2]]), (th[:, 0], th[:, 1], th[:, 2])

    def face_angles(self, logr) -> np.ndarray:
        """Corner angles, shape (faces, 3)."""
        radii, thetas = self._face_args(logr)
        try:
            return np.stack(triple_angles(radii, thetas, self.g), axis=1)
        except DegenerateTriangleError:
            raise DegenerateTriangleError(f"degenerate face {self._first_degenerate(logr)}") from None

    def _first_degenerate(self, logr):
        for k, f in enumerate(self.t.faces):
            radii, thetas = self._face_args(logr, [k])
            try:
                triple_angles(radii, thetas, self.g)
            except DegenerateTriangleError:
                return f
        return None

    def angle_sums(self, logr) -> np.ndarray:
        phi = self.face_angles(logr)
        if phi.dtype == np.float64:
            return np.bincount(self.faces.ravel(), weights=phi.ravel(), minlength=len(self.vertices))
        out = np.zeros(len(self.vertices), dtype=phi.dtype)
        np.add.at(out, self.faces.ravel(), phi.ravel())
        return out

    def curvature(self, logr) -> np.ndarray:
        sums = self.angle_sums(logr)[self.int_idx]
        if sums.dtype == np.float64:
            return sums - 2.0 * math.pi
        return sums - 8 * np.arctan(np.ones((), dtype=sums.dtype))

    def jacobian_full(self, logr) -> sp.csr_matrix:
        """d(angle sum at v)/d(log r_w) for all vertices v, w."""
        radii, thetas = self._face_args(logr)
        _, jac = angle_jacobian(radii, thetas, self.g)
        n = len(self.vertices)
        rows = np.repeat(self.faces, 3, axis=1).ravel()
        cols = np.tile(self.faces, (1, 3)).ravel()
        vals = np.moveaxis(jac, 2, 0).reshape(-1)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def jacobian(self, logr) -> sp.csr_matrix:
        """Rows for interior vertices, columns for all vertices."""
        return self.jacobian_full(logr)[self.int_idx, :]

    def vertex_curvature(self, vi: int, logr) -> float:
        slots = self.vertex_face_slots[vi]
        ks = [k for k, _ in slots]
        radii, thetas = self._face_args(logr, ks)
        phi = np.stack(triple_angles(radii, thetas, self.g), axis=1)
        return float(sum(phi[m, c] for m, (_, c) in enumerate(slots)) - 2.0 * math.pi)


def _system(t, a, g):
    return PatternSystem(t, a, g)


def _logr_from(sysm: PatternSystem, r: RadiusVector) -> np.ndarray:
    return np.log(np.array([r[v] for v in sysm.vertices], dtype=float))


def curvature(t: Triangulation, a: AngleAssignment, r: RadiusVector,
              g: GeometryLike = Geometry.EUCLIDEAN) -> Dict[int, float]:
    """Angle sum minus 2 pi at every interior vertex."""
    sysm = _system(t, a, g)
    k = sysm.curvature(_logr_from(sysm, r))
    return {v: float(x) for v, x in zip(sysm.interior, k)}


def curvature_jacobian(t: Triangulation, a: AngleAssignment, r: RadiusVector,
                       g: GeometryLike = Geometry.EUCLIDEAN):
    """Sparse Jacobian of curvature in log-radii.

    Returns (matrix, interior_order, vertex_order): rows follow the interior
    vertices, columns follow all vertices.
    """
    sysm = _system(t, a, g)
    return sysm.jacobian(_logr_from(sysm, r)), list(sysm.interior), list(sysm.vertices)


def _relax_vertex(sysm: PatternSystem, vi: int, logr: np.ndarray) -> None:
    x0 = logr[vi]

    def f(x):
        saved = logr[vi]
        logr[vi] = x
        try:
            return sysm.vertex_curvature(vi, logr)
        except DegenerateTriangleError:
            # Tiny own radius makes the angle sum large, huge radius makes it small.
            return math.inf if x < x0 else -math.inf
        finally:
            logr[vi] = saved

    lo, hi = x0 - 1.0, x0 + 1.0
    flo, fhi = f(lo), f(hi)
    # Curvature decreases in the vertex's own radius.
    grow = 1.0
    while flo < 0 and lo > x0 - 60:
        grow *= 2
        lo -= grow
        flo = f(lo)
    grow = 1.0
    while fhi > 0 and hi < x0 + 60:
        grow *= 2
        hi += grow
        fhi = f(hi)
    if flo * fhi > 0:
        return
    logr[vi] = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def relaxation_sweep(sysm: PatternSystem, logr: np.ndarray) -> None:
    for vi in sysm.int_idx:
        _relax_vertex(sysm, int(vi), logr)


def solve(t: Triangulation, a: AngleAssignment, boundary, g: GeometryLike = Geometry.EUCLIDEAN,
          opts: Optional[SolveOptions] = None) -> Tuple[RadiusVector, SolveReport]:
    """Find interior radii with vanishing curvature for given boundary radii.

    ``boundary`` maps each boundary vertex to a radius or, in hyperbolic
    geometry, to the marker "horocyclic".
    """
    g = as_geometry(g)
    opts = opts or SolveOptions()
    tol = DEFAULT_TOL[g] if opts.tol is None else float(opts.tol)
    rep = check_c1_c2(t, a)
    if not rep.passed:
        raise PreconditionError(f"angle data violates the realizability conditions: {rep.errors[:3]}")
    a = complete_to_G_tilde(t, a)
    sysm = _system(t, a, g)
    bvec = boundary if isinstance(boundary, RadiusVector) else RadiusVector.from_mapping(boundary, opts.r_cap)
    if bvec.horocyclic and g is not Geometry.HYPERBOLIC:
        raise PreconditionError("horocyclic boundary disks need hyperbolic geometry")
    missing = [v for v in sysm.boundary if v not in bvec]
    if missing:
        raise PreconditionError(f"missing boundary radii for vertices {missing[:10]}")
    extra = [v for v in bvec.radii if sysm.classes.get(v) is not VertexClass.BOUNDARY]
    if extra:
        raise PreconditionError(f"radii given for non-boundary vertices {extra[:10]}")
    if bvec.horocyclic:
        bvec = RadiusVector({v: (opts.r_cap if v in bvec.horocyclic else r) for v, r in bvec.radii.items()},
                            bvec.horocyclic)

    logr = np.zeros(len(sysm.vertices))
    for v in sysm.boundary:
        logr[sysm.index[v]] = math.log(bvec[v])
    finite = [math.log(bvec[v]) for v in sysm.boundary if v not in bvec.horocyclic]
    guess = float(np.mean(finite)) if finite else 0.0
    logr[sysm.int_idx] = guess
    if opts.initial:
        for v, r in opts.initial.items():
            if v in sysm.row_of and sysm.classes[v] is VertexClass.INTERIOR:
                logr[sysm.index[v]] = math.log(r)

    damping: List[float] = []
    residuals: List[float] = []
    sweeps = 0
    it = 0
    if len(sysm.int_idx) == 0:
        report = SolveReport(0, 0.0, [], True, tol, g.value)
        return _result(sysm, logr, bvec), report

    def residual(x):
        try:
            return float(np.max(np.abs(sysm.curvature(x))))
        except DegenerateTriangleError:
            return math.inf

    res = residual(logr)
    residuals.append(res)
    while it < opts.max_iter:
        if res < tol and (not opts.polish or res <= POLISH_TOL):
            break
        it += 1
        K = sysm.curvature(logr)
        J = sysm.jacobian(logr)[:, sysm.int_idx].tocsc()
        try:
            step = spla.spsolve(J, -K)
        except RuntimeError:
            step = np.full(len(K), np.nan)
        alpha = 1.0
        accepted = False
        if np.all(np.isfinite(step)):
            for _ in range(MAX_HALVINGS + 1):
                trial = logr.copy()
                trial[sysm.int_idx] += alpha * step
                new = residual(trial)
                if new < res:
                    accepted = True
                    break
                alpha *= 0.5
        if accepted:
            logr = trial
            res = new
            damping.append(alpha)
        else:
            if res < tol:
                # Converged and polishing no longer helps.
                break
            damping.append(0.0)
            relaxation_sweep(sysm, logr)
            sweeps += 1
            res = residual(logr)
        residuals.append(res)
        log.debug("newton iteration %d residual %.3e step %.3g", it, res, alpha)
    report = SolveReport(it, res, damping, bool(res < tol), tol, g.value, sweeps, residuals)
    if not report.converged:
        log.warning("solve did not converge: max |K| = %.3e after %d iterations", res, it)
    return _result(sysm, logr, bvec), report


def extended_logradii(sysm: PatternSystem, r: RadiusVector, sweeps: int = 4) -> np.ndarray:
    """Log-radii in extended precision, refined so the curvature vanishes to
    long-double rounding.  Boundary radii are kept as given."""
    logr = np.log(np.array([r[v] for v in sysm.vertices], dtype=np.longdouble))
    if len(sysm.int_idx) == 0:
        return logr
    K = sysm.curvature(logr)
    res = np.max(np.abs(K))
    for _ in range(sweeps):
        J = sysm.jacobian(logr.astype(float))[:, sysm.int_idx].tocsc()
        step = spla.spsolve(J, -K.astype(float))
        trial = logr.copy()
        trial[sysm.int_idx] += step.astype(np.longdouble)
        Kt = sysm.curvature(trial)
        new = np.max(np.abs(Kt))
        if not new < res:
            break
        logr, K, res = trial, Kt, new
    return logr


def _result(sysm: PatternSystem, logr, bvec: RadiusVector) -> RadiusVector:
    radii = {v: float(math.exp(logr[k])) for k, v in enumerate(sysm.vertices)}
    for v in sysm.boundary:
        radii[v] = float(bvec[v])
    return RadiusVector(radii, bvec.horocyclic)


@dataclass
class MaxPrincipleResult:
    passed: bool
    max_ratio: float
    min_ratio: float
    argmax: int
    argmin: int
    boundary_max: float
    boundary_min: float

    def to_dict(self):
        return dict(self.__dict__)


def max_principle_check(t: Triangulation, a: AngleAssignment, r1: RadiusVector, r2: RadiusVector,
                        g: GeometryLike = Geometry.EUCLIDEAN, rtol: float = 1e-12) -> MaxPrincipleResult:
    """Extremes of r2/r1 must be reached on the boundary.

    In hyperbolic geometry only a maximum above 1 and a minimum below 1 are
    required to be boundary values.  Horocyclic vertices are skipped.
    """
    g = as_geometry(g)
    cls = classify_vertices(t, complete_to_G_tilde(t, a))
    skip = r1.horocyclic | r2.horocyclic
    verts = [v for v in t.vertices if v not in skip]
    ratio = {v: r2[v] / r1[v] for v in verts}
    bnd = [v for v in verts if cls[v] is VertexClass.BOUNDARY]
    vmax = max(verts, key=lambda v: ratio[v])
    vmin = min(verts, key=lambda v: ratio[v])
    bmax = max(ratio[v] for v in bnd)
    bmin = min(ratio[v] for v in bnd)
    ok_max = bmax >= ratio[vmax] * (1 - rtol)
    ok_min = bmin <= ratio[vmin] * (1 + rtol)
    if g is Geometry.HYPERBOLIC:
        ok_max = ok_max or ratio[vmax] <= 1.0
        ok_min = ok_min or ratio[vmin] >= 1.0
    return MaxPrincipleResult(bool(ok_max and ok_min), ratio[vmax], ratio[vmin], vmax, vmin, bmax, bmin)
