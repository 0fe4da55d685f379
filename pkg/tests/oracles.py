"""Independent reference computations used across the tests."""
import math

import mpmath
import numpy as np

mpmath.mp.dps = 40


def mp_angles(radii, thetas, hyperbolic=False):
    """Corner angles by the plain law of cosines in 40-digit arithmetic."""
    r0, r1, r2 = (mpmath.mpf(x) for x in radii)
    t01, t02, t12 = (mpmath.mpf(x) for x in thetas)

    if hyperbolic:
        def side(a, b, t):
            return mpmath.acosh(mpmath.cosh(a) * mpmath.cosh(b) + mpmath.cos(t) * mpmath.sinh(a) * mpmath.sinh(b))

        def corner(opp, s1, s2):
            num = mpmath.cosh(s1) * mpmath.cosh(s2) - mpmath.cosh(opp)
            return mpmath.acos(num / (mpmath.sinh(s1) * mpmath.sinh(s2)))
    else:
        def side(a, b, t):
            return mpmath.sqrt(a * a + b * b + 2 * a * b * mpmath.cos(t))

        def corner(opp, s1, s2):
            return mpmath.acos((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2))

    d01, d02, d12 = side(r0, r1, t01), side(r0, r2, t02), side(r1, r2, t12)
    return (corner(d12, d01, d02), corner(d02, d01, d12), corner(d01, d02, d12))


def mp_derivative(radii, thetas, i, j, hyperbolic=False):
    """Central difference of corner i in log r_j, 40 digits, step 1e-15."""
    h = mpmath.mpf("1e-15")
    up = [mpmath.mpf(x) for x in radii]
    dn = list(up)
    up[j] = up[j] * mpmath.exp(h)
    dn[j] = dn[j] * mpmath.exp(-h)
    return (mp_angles(up, thetas, hyperbolic)[i] - mp_angles(dn, thetas, hyperbolic)[i]) / (2 * h)


def float_angles(radii, thetas):
    r0, r1, r2 = radii
    t01, t02, t12 = thetas
    d01 = math.sqrt(r0 * r0 + r1 * r1 + 2 * r0 * r1 * math.cos(t01))
    d02 = math.sqrt(r0 * r0 + r2 * r2 + 2 * r0 * r2 * math.cos(t02))
    d12 = math.sqrt(r1 * r1 + r2 * r2 + 2 * r1 * r2 * math.cos(t12))

    def corner(opp, s1, s2):
        return math.acos(max(-1.0, min(1.0, (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2))))

    return corner(d12, d01, d02), corner(d02, d01, d12), corner(d01, d02, d12)


def fd_derivative(radii, thetas, i, j, rtol=1e-8):
    """Richardson central difference in float64; falls back to the 40-digit
    difference when its own error estimate is above rtol (extreme triples)."""

    def central(h):
        up, dn = list(radii), list(radii)
        up[j] *= math.exp(h)
        dn[j] *= math.exp(-h)
        return (float_angles(up, thetas)[i] - float_angles(dn, thetas)[i]) / (2 * h)

    h = 1e-3
    coarse = central(h)
    fine = central(h / 2)
    est = (4 * fine - coarse) / 3
    finer = (4 * central(h / 4) - fine) / 3
    if abs(est - finer) <= rtol * max(abs(finer), 1e-3):
        return finer
    return float(mp_derivative(radii, thetas, i, j))


def tangent_angle(r1, r2, d):
    """Dihedral angle measured from the tangent lines at an intersection point
    of circles centered (0,0) and (d,0); 0 for tangent circles."""
    x = (d * d + r1 * r1 - r2 * r2) / (2 * d)
    y2 = r1 * r1 - x * x
    if y2 <= 0:
        return 0.0
    y = math.sqrt(y2)
    # Radii to the intersection point are normals; the tangents' angle is
    # pi minus the angle between the two normals at that point.
    n1 = np.array([x, y]) / r1
    n2 = np.array([x - d, y]) / r2
    between = math.acos(max(-1.0, min(1.0, float(n1 @ n2))))
    return math.pi - between


def radical_point_direct(centers, radii):
    """Solve the two radical-axis equations |z-Ai|^2 - ri^2 = |z-Aj|^2 - rj^2."""
    A = np.asarray(centers, dtype=float)
    r = np.asarray(radii, dtype=float)
    M = np.array([2 * (A[1] - A[0]), 2 * (A[2] - A[0])])
    b = np.array([A[1] @ A[1] - A[0] @ A[0] - r[1] ** 2 + r[0] ** 2,
                  A[2] @ A[2] - A[0] @ A[0] - r[2] ** 2 + r[0] ** 2])
    return np.linalg.solve(M, b)


def line_distance(p, a, b):
    a, b, p = (np.asarray(x, dtype=float) for x in (a, b, p))
    u = b - a
    return abs(u[0] * (p - a)[1] - u[1] * (p - a)[0]) / np.linalg.norm(u)


def all_joining_paths(g, V1, V2):
    """Vertex lists of every simple path from V1 to V2 (networkx graph)."""
    import networkx as nx

    out = []
    for a in V1:
        if a in V2:
            out.append([a])
            continue
        for b in V2:
            if b in V1:
                continue
            out.extend(nx.all_simple_paths(g, a, b))
    return out


def brute_force_vel(g, V1, V2):
    """1 / min sum(eta^2) over metrics giving every joining path length >= 1,
    with the path family listed in full and solved by cvxpy."""
    import cvxpy as cp

    paths = all_joining_paths(g, V1, V2)
    if not paths:
        return math.inf
    nodes = sorted(g.nodes)
    idx = {v: k for k, v in enumerate(nodes)}
    A = np.zeros((len(paths), len(nodes)))
    for i, p in enumerate(paths):
        for v in p:
            A[i, idx[v]] = 1.0
    eta = cp.Variable(len(nodes))
    prob = cp.Problem(cp.Minimize(cp.sum_squares(eta)), [A @ eta >= 1, eta >= 0])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return 1.0 / prob.value


def brute_force_separating_mod(g, cuts):
    """min sum(eta^2) with every listed vertex set of total weight >= 1."""
    import cvxpy as cp

    nodes = sorted(g.nodes)
    idx = {v: k for k, v in enumerate(nodes)}
    A = np.zeros((len(cuts), len(nodes)))
    for i, c in enumerate(cuts):
        for v in c:
            A[i, idx[v]] = 1.0
    eta = cp.Variable(len(nodes))
    prob = cp.Problem(cp.Minimize(cp.sum_squares(eta)), [A @ eta >= 1, eta >= 0])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return prob.value
