import math

import numpy as np
import pytest

from diskpattern.complex import AngleAssignment, boundary_of
from diskpattern.geometry import Geometry, dihedral_from_distance
from diskpattern.generators import lattice_ball, single_triangle
from diskpattern.layout import (LayoutError, centers_outside_check, cover_count, detect_reducible_crossings,
                                holonomy_residual, layout, recovered_angles, verify_angles)
from diskpattern.solver import RadiusVector, solve

from helpers import placed_patch, solved_patch


def distance_matrix(p):
    cs = p.centers_float()
    return np.abs(cs[:, None] - cs[None, :])


def random_solved(name, depth, seed):
    t, a, _ = lattice_ball(name, depth)
    rng = np.random.default_rng(seed)
    r, rep = solve(t, a, {v: float(rng.uniform(0.5, 2)) for v in boundary_of(t, a)})
    assert rep.converged
    return t, a, r


def test_hex_centers_on_triangular_lattice():
    t, a, r, p = placed_patch("hex", 3)
    z = p.centers_float() / 2
    # Coordinates in the basis 1, e^{i pi/3}.
    w = z.imag / math.sin(math.pi / 3)
    u = z.real - w * math.cos(math.pi / 3)
    assert np.max(np.abs(u - np.round(u))) < 1e-9
    assert np.max(np.abs(w - np.round(w))) < 1e-9


def test_square_grid_centers_on_integer_lattice():
    t, a, r, p = placed_patch("square-grid", 3)
    d2 = distance_matrix(p) ** 2
    assert np.max(np.abs(d2 - np.round(d2))) < 1e-8
    for (u, v) in t.edges:
        d = abs(p.center(u) - p.center(v))
        assert d == pytest.approx(1.0 if a.theta[(u, v)] else math.sqrt(2), abs=1e-9)


def test_anchor_invariance():
    t, a, r = random_solved("hex", 3, 0)
    p1 = layout(t, a, r)
    v = t.vertices[5]
    p2 = layout(t, a, r, anchor=v, neighbor=t.neighbors[v][1])
    assert np.max(np.abs(distance_matrix(p1) - distance_matrix(p2))) < 1e-8


def test_anchor_rotation_equivariance():
    t, a, r = random_solved("square-grid", 2, 1)
    v = t.vertices[0]
    n1, n2 = t.neighbors[v][:2]
    p1 = layout(t, a, r, anchor=v, neighbor=n1)
    p2 = layout(t, a, r, anchor=v, neighbor=n2)
    # Rotating p1 so that n2 lands on the positive axis reproduces p2.
    rot = abs(p1.center(n2)) / p1.center(n2)
    assert np.max(np.abs(p1.centers_float() * rot - p2.centers_float())) < 1e-9


def test_bad_anchor_neighbor():
    t, a, r, _ = solved_patch("hex", 2)
    with pytest.raises(ValueError):
        layout(t, a, r, anchor=t.vertices[0], neighbor=t.vertices[0])


@pytest.mark.parametrize("name,seed", [("hex", 2), ("square-grid", 3), ("hex", 4)])
def test_holonomy_and_angles_on_solved(name, seed):
    t, a, r = random_solved(name, 4, seed)
    p = layout(t, a, r)
    assert holonomy_residual(p, t, a) < 1e-9
    assert verify_angles(p, a) < 1e-8


def test_holonomy_detects_perturbation():
    t, a, r, p = placed_patch("hex", 3)
    rng = np.random.default_rng(7)
    p2 = layout(t, a, r)
    p2.radii = p2.radii * (1 + 0.01 * rng.standard_normal(len(p2.radii)))
    assert holonomy_residual(p2, t, a) > 1e-4


def test_layout_refuses_unsolved():
    t, a, r, _ = solved_patch("hex", 3)
    bad = {v: r[v] * (1.01 if k % 2 else 1.0) for k, v in enumerate(t.vertices)}
    with pytest.raises(LayoutError):
        layout(t, a, RadiusVector(bad))


def test_single_triangle_residual_zero():
    t = single_triangle()
    a = AngleAssignment({(0, 1): 0.3, (0, 2): 1.1, (1, 2): 0.0})
    p = layout(t, a, RadiusVector({0: 1.0, 1: 2.5, 2: 0.4}))
    assert holonomy_residual(p, t, a) < 1e-15
    # Tangent pairs: angle error grows like the square root of the distance error.
    assert verify_angles(p, a) < 1e-8


def test_square_grid_recovered_angles():
    t, a, r, p = placed_patch("square-grid", 3)
    rec = recovered_angles(p)
    for e, x in rec.items():
        want = math.pi / 2 if a.theta_tilde[e] else 0.0
        assert abs(x - want) < 1e-8


def test_pythagorean_pair():
    assert dihedral_from_distance(3.0, 4.0, 5.0) == pytest.approx(math.pi / 2, abs=1e-15)


def test_square_grid_crossings_are_completed_diagonals():
    t, a, r, p = placed_patch("square-grid", 3)
    rep = detect_reducible_crossings(p, t, a)
    assert rep.all_reducible and not rep.unexplained
    completed = a.completed_edges
    assert len(rep.crossings) == len(completed)
    for e, f in rep.crossings:
        assert (e in completed) != (f in completed)
        assert a.theta_tilde[e] == a.theta_tilde[f] == 0.0
    assert not detect_reducible_crossings(p, t, a, edges=p.reduced_edges()).crossings


def test_hex_no_crossings():
    t, a, r, p = placed_patch("hex", 3)
    assert detect_reducible_crossings(p, t, a).crossings == []


@pytest.mark.parametrize("name", ["hex", "square-grid"])
def test_centers_outside_and_cover(name):
    t, a, r, p = placed_patch(name, 3)
    ok, margin = centers_outside_check(p)
    assert ok
    assert cover_count(p, samples=80) <= 4


def test_random_pattern_centers_outside_and_cover():
    t, a, r = random_solved("square-grid", 3, 8)
    p = layout(t, a, r)
    assert centers_outside_check(p)[0]
    assert cover_count(p, samples=80) <= 4


def test_hyperbolic_layout_inside_disk():
    t, a, _ = lattice_ball("degree7", 2)
    r, rep = solve(t, a, {v: 0.5 for v in boundary_of(t, a)}, Geometry.HYPERBOLIC)
    p = layout(t, a, r, Geometry.HYPERBOLIC)
    assert holonomy_residual(p, t, a) < 1e-7
    assert verify_angles(p, a) < 1e-6
    assert np.all(np.abs(p.centers_float()) + p.radii_float() < 1)
    anchor = p.order[0][0]
    assert abs(p.center(anchor)) < 1e-12


def test_pattern_serializes():
    t, a, r, p = placed_patch("hex", 2)
    d = p.to_dict()
    assert len(d["disks"]) == len(t.vertices)
    assert d["geometry"] == "euclidean"
