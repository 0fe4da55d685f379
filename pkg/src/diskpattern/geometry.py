"""Metric kernel for pairs and triples of intersecting disks.

All routines work in euclidean geometry or in the hyperbolic plane (Poincare
unit-disk model, curvature -1).  Array arguments broadcast, so a whole batch
of triples can be evaluated with one call.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

HALF_PI = 0.5 * math.pi
# Triangle-inequality slack below this fraction of the perimeter is degenerate.
DEGENERACY_RTOL = 1e-12
# Angles closer than this to 0 or pi/2 count as exactly tangent or orthogonal.
ANGLE_ATOL = 1e-12


class Geometry(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


GeometryLike = Union[Geometry, str]


def as_geometry(g: GeometryLike) -> Geometry:
    return g if isinstance(g, Geometry) else Geometry(str(g).lower())


class DomainError(ValueError):
    """An argument lies outside the domain of a geometric formula."""


class DegenerateTriangleError(ValueError):
    """The three center distances violate the strict triangle inequality."""


def _real(x):
    """Array view that keeps float64/longdouble and promotes everything else."""
    a = np.asarray(x)
    return a if a.dtype in (np.float64, np.longdouble) else a.astype(float)


def _check_radii(*radii):
    for r in radii:
        r = np.asarray(r)
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise DomainError("radii must be positive and finite")


def _half_sine_sq(theta):
    """sin^2(theta / 2), exact for right angles."""
    theta = _real(theta)
    return np.where(np.abs(theta - HALF_PI) <= ANGLE_ATOL, theta.dtype.type(0.5),
                    np.sin(0.5 * theta) ** 2)


def center_distance(r1, r2, theta, g: GeometryLike = Geometry.EUCLIDEAN):
    """Distance between the centers of two disks meeting at dihedral angle theta.

    Euclidean: d^2 = r1^2 + r2^2 + 2 r1 r2 cos(theta).
    Hyperbolic: cosh d = cosh r1 cosh r2 + cos(theta) sinh r1 sinh r2.

    Both are evaluated in a cancellation-free form built on sin^2(theta/2).
    """
    g = as_geometry(g)
    _check_radii(r1, r2)
    r1 = _real(r1)
    r2 = _real(r2)
    s2 = _half_sine_sq(theta)
    if g is Geometry.EUCLIDEAN:
        out = np.sqrt((r1 + r2) ** 2 - 4.0 * s2 * r1 * r2)
    else:
        # Overflow yields inf/nan sides, which the triangle check rejects.
        with np.errstate(over="ignore", invalid="ignore"):
            half = np.sinh(0.5 * (r1 + r2)) ** 2 - s2 * np.sinh(r1) * np.sinh(r2)
            out = 2.0 * np.arcsinh(np.sqrt(half))
    return out[()] if out.ndim == 0 else out


def dihedral_from_distance(r1, r2, d):
    """Euclidean inverse of center_distance: recover the intersection angle.

    Works for circles in the hyperbolic disk model as well, since the model is
    conformal and the euclidean circles meet at the same angle.
    """
    r1, r2, d = _real(r1), _real(r2), _real(d)
    s2 = ((r1 + r2) - d) * ((r1 + r2) + d) / (4.0 * r1 * r2)
    out = 2.0 * np.arcsin(np.sqrt(np.clip(s2, 0.0, 1.0)))
    return out[()] if out.ndim == 0 else out


def _corner_angles(a, b, c, g: Geometry, check=True):
    """Corner angles opposite sides a, b, c (half-angle formula)."""
    s = 0.5 * (a + b + c)
    sa, sb, sc = s - a, s - b, s - c
    if check:
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise DegenerateTriangleError("side length overflowed")
        slack = 2.0 * np.minimum(np.minimum(sa, sb), sc)
        if np.any(slack <= DEGENERACY_RTOL * (a + b + c)):
            raise DegenerateTriangleError("triangle inequality fails within tolerance")
    if g is Geometry.EUCLIDEAN:
        f = lambda x: x
    else:
        f = np.sinh
    fs, fa, fb, fc = f(s), f(sa), f(sb), f(sc)
    alpha = 2.0 * np.arctan2(np.sqrt(fb * fc), np.sqrt(fs * fa))
    beta = 2.0 * np.arctan2(np.sqrt(fa * fc), np.sqrt(fs * fb))
    gamma = 2.0 * np.arctan2(np.sqrt(fa * fb), np.sqrt(fs * fc))
    return alpha, beta, gamma


def triple_sides(radii, thetas, g: GeometryLike = Geometry.EUCLIDEAN):
    """Side lengths (d01, d02, d12) for radii (r0, r1, r2), angles (t01, t02, t12)."""
    g = as_geometry(g)
    r0, r1, r2 = (_real(x) for x in radii)
    t01, t02, t12 = thetas
    return (center_distance(r0, r1, t01, g), center_distance(r0, r2, t02, g),
            center_distance(r1, r2, t12, g))


def triple_angles(radii, thetas, g: GeometryLike = Geometry.EUCLIDEAN):
    """Corner angles (phi0, phi1, phi2) of the triangle of centers.

    radii = (r0, r1, r2); thetas = (t01, t02, t12).  Raises
    DegenerateTriangleError when the center triangle collapses.
    """
    g = as_geometry(g)
    d01, d02, d12 = triple_sides(radii, thetas, g)
    return _corner_angles(d12, d02, d01, g)


def _is_square_grid_triple(t_ij, t_ik, t_jk):
    """Angle pattern (0, pi/2, pi/2) with the 0 on the side (i, j)."""
    return ((np.abs(t_ij) <= ANGLE_ATOL) & (np.abs(t_ik - HALF_PI) <= ANGLE_ATOL)
            & (np.abs(t_jk - HALF_PI) <= ANGLE_ATOL))


@dataclass(frozen=True)
class RadicalPoint:
    """Radical point of a canonically placed euclidean triple.

    Canonical placement: center 0 at the origin, center 1 on the positive
    x-axis, center 2 in the upper half plane.
    """

    point: np.ndarray
    centers: np.ndarray
    h01: float
    h02: float
    h12: float


def _feet(radii, thetas):
    """Side lengths, angles, signed feet p_ij and altitudes h_ij (vectorized)."""
    r0, r1, r2 = (np.asarray(x, dtype=float) for x in radii)
    t01, t02, t12 = (np.asarray(x, dtype=float) for x in thetas)
    _check_radii(r0, r1, r2)
    d01, d02, d12 = triple_sides((r0, r1, r2), (t01, t02, t12))
    phi0, phi1, phi2 = _corner_angles(d12, d02, d01, Geometry.EUCLIDEAN)
    # Distance from center i, along side (i, j), to the radical axis of (i, j).
    p01 = (d01 * d01 + (r0 - r1) * (r0 + r1)) / (2.0 * d01)
    p02 = (d02 * d02 + (r0 - r2) * (r0 + r2)) / (2.0 * d02)
    p12 = (d12 * d12 + (r1 - r2) * (r1 + r2)) / (2.0 * d12)
    p10, p20, p21 = d01 - p01, d02 - p02, d12 - p12
    c0, s0 = np.cos(phi0), np.sin(phi0)
    c1, s1 = np.cos(phi1), np.sin(phi1)
    c2, s2 = np.cos(phi2), np.sin(phi2)

    def alt(p_a, p_b, cos_, sin_):
        # Distance to side a from the vertex shared by sides a and b.
        return (p_b - p_a * cos_) / sin_

    # Each altitude is computable from either endpoint of its side; use the
    # endpoint whose corner angle is better conditioned.
    h01 = np.where(s0 >= s1, alt(p01, p02, c0, s0), alt(p10, p12, c1, s1))
    h02 = np.where(s0 >= s2, alt(p02, p01, c0, s0), alt(p20, p21, c2, s2))
    h12 = np.where(s1 >= s2, alt(p12, p10, c1, s1), alt(p21, p20, c2, s2))
    h01 = np.where(_is_square_grid_triple(t01, t02, t12), 0.0, h01)
    h02 = np.where(_is_square_grid_triple(t02, t01, t12), 0.0, h02)
    h12 = np.where(_is_square_grid_triple(t12, t01, t02), 0.0, h12)
    return (d01, d02, d12), (phi0, phi1, phi2), (p01, p02), (h01, h02, h12)


def radical_point(radii, thetas) -> RadicalPoint:
    """Common point of the three radical axes and its distances to the sides."""
    (d01, d02, _), (phi0, _, _), (p01, _), (h01, h02, h12) = _feet(radii, thetas)
    centers = np.array([[0.0, 0.0], [float(d01), 0.0],
                        [float(d02 * np.cos(phi0)), float(d02 * np.sin(phi0))]])
    return RadicalPoint(np.array([float(p01), float(h01)]), centers,
                        float(h01), float(h02), float(h12))


def _fd_step(logr):
    return 1e-6 * np.maximum(1.0, np.exp(logr))


def angle_jacobian(radii, thetas, g: GeometryLike = Geometry.EUCLIDEAN):
    """Corner angles and their derivatives with respect to the log-radii.

    Returns (phi, jac) with phi of shape (3, ...) and jac of shape (3, 3, ...),
    jac[i, j] = d phi_i / d log r_j.  Euclidean entries use the closed form
    h_ij / d_ij with the diagonal fixed by degree-0 homogeneity; hyperbolic
    entries use central differences.
    """
    g = as_geometry(g)
    radii = tuple(np.asarray(x, dtype=float) for x in radii)
    thetas = tuple(np.asarray(x, dtype=float) for x in thetas)
    if g is Geometry.EUCLIDEAN:
        (d01, d02, d12), phi, _, (h01, h02, h12) = _feet(radii, thetas)
        j01, j02, j12 = h01 / d01, h02 / d02, h12 / d12
        jac = np.array([[-(j01 + j02), j01, j02],
                        [j01, -(j01 + j12), j12],
                        [j02, j12, -(j02 + j12)]])
        return np.array(phi), jac
    return np.array(triple_angles(radii, thetas, g)), _fd_jacobian(radii, thetas, g)


def _fd_jacobian(radii, thetas, g: Geometry):
    logs = [np.log(r) for r in radii]
    cols = []
    for j in range(3):
        step = _fd_step(logs[j])
        up = list(logs)
        dn = list(logs)
        up[j] = logs[j] + step
        dn[j] = logs[j] - step
        pu = np.array(triple_angles([np.exp(x) for x in up], thetas, g))
        pd = np.array(triple_angles([np.exp(x) for x in dn], thetas, g))
        cols.append((pu - pd) / (2.0 * step))
    return np.stack(cols, axis=1)


def _altitude_at_corner(radii, thetas, i: int, j: int):
    """h_ij / d_ij evaluated with the foot formula anchored at corner i."""
    k = 3 - i - j
    r = [np.asarray(x, dtype=float) for x in radii]
    _check_radii(*r)
    th = {frozenset((0, 1)): thetas[0], frozenset((0, 2)): thetas[1],
          frozenset((1, 2)): thetas[2]}
    t_ij, t_ik, t_jk = (np.asarray(th[frozenset(p)], dtype=float)
                        for p in ((i, j), (i, k), (j, k)))
    d_ij = center_distance(r[i], r[j], t_ij)
    d_ik = center_distance(r[i], r[k], t_ik)
    d_jk = center_distance(r[j], r[k], t_jk)
    phi_i = _corner_angles(d_jk, d_ik, d_ij, Geometry.EUCLIDEAN)[0]
    p_ij = (d_ij * d_ij + (r[i] - r[j]) * (r[i] + r[j])) / (2.0 * d_ij)
    p_ik = (d_ik * d_ik + (r[i] - r[k]) * (r[i] + r[k])) / (2.0 * d_ik)
    h = (p_ik - p_ij * np.cos(phi_i)) / np.sin(phi_i)
    h = np.where(_is_square_grid_triple(t_ij, t_ik, t_jk), 0.0, h)
    return h / d_ij


def corner_anchored_derivative(radii, thetas, i: int, j: int):
    """h_ij / d_ij with the altitude measured from corner i only.

    Evaluating (i, j) and (j, i) with this function uses two different
    formulas, so their agreement is a genuine symmetry test.
    """
    if i == j or not {i, j} <= {0, 1, 2}:
        raise ValueError("corners must be distinct members of {0, 1, 2}")
    out = _altitude_at_corner(radii, thetas, i, j)
    return out[()] if np.ndim(out) == 0 else out


def dphi_dlogrho(radii, thetas, i: int, j: int, g: GeometryLike = Geometry.EUCLIDEAN):
    """Derivative of corner angle i with respect to log r_j, i != j.

    Euclidean values are h_ij / d_ij, with the radical-point altitude taken
    from whichever endpoint of side (i, j) has the better-conditioned angle.
    """
    if i == j or not {i, j} <= {0, 1, 2}:
        raise ValueError("corners must be distinct members of {0, 1, 2}")
    g = as_geometry(g)
    radii = tuple(np.asarray(x, dtype=float) for x in radii)
    thetas = tuple(np.asarray(x, dtype=float) for x in thetas)
    if g is Geometry.EUCLIDEAN:
        (d01, d02, d12), _, _, (h01, h02, h12) = _feet(radii, thetas)
        pick = {frozenset((0, 1)): h01 / d01, frozenset((0, 2)): h02 / d02, frozenset((1, 2)): h12 / d12}
        out = pick[frozenset((i, j))]
    else:
        out = _fd_jacobian(radii, thetas, g)[i, j]
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    margin: float


def corner_angle_bound_check(radii, thetas, constant: float = 2.0) -> BoundCheck:
    """Check d phi0 / d log r_j <= constant * phi0 for j = 1, 2.

    The margin is min_j (constant * phi0 - derivative); it is nonnegative on a
    pass.  Array inputs are reduced to the worst case.
    """
    phi, jac = angle_jacobian(radii, thetas, Geometry.EUCLIDEAN)
    margin = np.minimum(constant * phi[0] - jac[0, 1], constant * phi[0] - jac[0, 2])
    worst = float(np.min(margin))
    return BoundCheck(worst >= 0.0, worst)


# Circles and disk automorphisms --------------------------------------------


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("circle radius must be positive")


@dataclass(frozen=True)
class Line:
    """Image of a circle through the pole of a Mobius map."""

    point: complex
    direction: complex


@dataclass(frozen=True)
class DiskAutomorphism:
    """z -> exp(i phi) (z - a) / (1 - conj(a) z)."""

    a: complex = 0j
    phi: float = 0.0

    def __post_init__(self):
        if abs(self.a) >= 1.0:
            raise DomainError("automorphism parameter must satisfy |a| < 1")

    def __call__(self, z):
        a = self.a
        return cmath.exp(1j * self.phi) * (z - a) / (1.0 - a.conjugate() * z)

    def inverse(self) -> "DiskAutomorphism":
        # w = e^{i phi}(z - a)/(1 - conj(a) z)  =>  z = (w e^{-i phi} + a)/(1 + conj(a) w e^{-i phi})
        return DiskAutomorphism(-self.a * cmath.exp(1j * self.phi), -self.phi)

    def derivative(self, z):
        a = self.a
        return cmath.exp(1j * self.phi) * (1.0 - abs(a) ** 2) / (1.0 - a.conjugate() * z) ** 2

    def compose(self, other: "DiskAutomorphism") -> "DiskAutomorphism":
        """self after other, as a single automorphism."""
        a = other.inverse()(self.inverse()(0j))
        # For f(z) = e^{i phi}(z - a)/(1 - conj(a) z), f'(a) = e^{i phi}/(1 - |a|^2).
        deriv = self.derivative(other(a)) * other.derivative(a)
        return DiskAutomorphism(a, cmath.phase(deriv))


def mobius_on_circle(m: DiskAutomorphism, c: Circle) -> Union[Circle, Line]:
    """Image of a circle under a unit-disk automorphism."""
    a = complex(m.a)
    rot = cmath.exp(1j * m.phi)
    center, r = complex(c.center), float(c.radius)
    if a == 0:
        return Circle(rot * center, r)
    pole = 1.0 / a.conjugate()
    gap = abs(pole - center) - r
    if abs(gap) <= 1e-15 * max(1.0, abs(pole)):
        p = m(center - r * (pole - center) / abs(pole - center))
        q = m(center + 1j * r * (pole - center) / abs(pole - center))
        return Line(p, (q - p) / abs(q - p))
    # The image center is the image of the reflection of the pole in c.
    star = center + r * r / (pole - center).conjugate()
    new_center = m(star)
    new_radius = abs(m(center + r) - new_center)
    return Circle(new_center, new_radius)


def hyperbolic_radius(c: Circle) -> float:
    """Hyperbolic radius of a disk whose closure lies in the open unit disk."""
    dist = abs(complex(c.center))
    near, far = dist - c.radius, dist + c.radius
    if far >= 1.0:
        raise DomainError("disk meets or leaves the unit circle")
    return float(math.atanh(far) - math.atanh(near))


def hyperbolic_center(c: Circle) -> complex:
    """Point of the unit disk at the hyperbolic center of a disk inside it."""
    center = complex(c.center)
    dist = abs(center)
    near, far = dist - c.radius, dist + c.radius
    if far >= 1.0:
        raise DomainError("disk meets or leaves the unit circle")
    unit = center / dist if dist > 0 else 1.0 + 0j
    mid = 0.5 * (math.atanh(far) + math.atanh(near))
    return math.tanh(mid) * unit


def circle_from_hyperbolic(direction: complex, dist: float, radius: float) -> Circle:
    """Euclidean circle of the hyperbolic disk centered at hyperbolic distance
    dist from the origin along the unit vector direction."""
    lo = math.tanh(0.5 * (dist - radius))
    hi = math.tanh(0.5 * (dist + radius))
    return Circle(0.5 * (lo + hi) * direction, 0.5 * (hi - lo))


def horocycle_at(direction: complex, inner_radius: float, theta: float) -> Circle:
    """Horocycle touching the unit circle at the given direction and meeting
    the origin-centered circle of euclidean radius inner_radius at angle theta."""
    r = (1.0 - inner_radius ** 2) / (2.0 * (1.0 + inner_radius * math.cos(theta)))
    return Circle((1.0 - r) * direction, r)
