import itertools
import math
import warnings

import pytest
from hypothesis import given, strategies as st

from diskpattern.complex import (AngleAssignment, ExhaustionWarning, InconsistentDataError, Triangulation,
                                 VertexClass, check_c1_c2, classify_vertices, complete_to_G_tilde,
                                 detect_reducible_edges, edge_key, exhaustion, validate_complex)
from diskpattern.generators import lattice_ball, make_generator, single_triangle, wheel

HP = math.pi / 2


def kinds(report):
    return {e["kind"] for e in report.errors}


def square_with_diagonal():
    """Orthogonal 4-cycle 0-1-2-3 with diagonal [0, 2] at 0."""
    t = Triangulation(((0, 1, 2), (0, 2, 3)))
    theta = {e: HP for e in t.edges}
    theta[(0, 2)] = 0.0
    return t, AngleAssignment(theta)


# Validation -----------------------------------------------------------------------


def test_single_triangle_valid():
    rep = validate_complex(single_triangle())
    assert rep.passed
    assert sorted(rep.boundary_cycles[0]) == [0, 1, 2]


def test_two_faces_opposite_orientation_on_shared_edge():
    assert validate_complex(Triangulation(((0, 1, 2), (1, 0, 3)))).passed


def test_inconsistent_orientation_reported():
    assert "inconsistent-orientation" in kinds(validate_complex(Triangulation(((0, 1, 2), (0, 1, 3)))))


def test_non_manifold_edge_reported():
    rep = validate_complex(Triangulation(((0, 1, 2), (1, 0, 3), (0, 1, 4))))
    assert not rep.passed
    bad = [e for e in rep.errors if e["kind"] == "non-manifold-edge"]
    assert bad and bad[0]["edge"] == [0, 1]


def test_duplicate_and_degenerate_faces():
    assert "duplicate-face" in kinds(validate_complex(Triangulation(((0, 1, 2), (1, 2, 0)))))
    assert "degenerate-face" in kinds(validate_complex(Triangulation(((0, 1, 1),))))


def test_disconnected_reported():
    assert "disconnected" in kinds(validate_complex(Triangulation(((0, 1, 2), (3, 4, 5)))))


def test_non_manifold_vertex_reported():
    # Two triangles glued at a single vertex.
    assert "non-manifold-vertex" in kinds(validate_complex(Triangulation(((0, 1, 2), (0, 3, 4)))))


def test_empty_complex_rejected():
    assert not validate_complex(Triangulation(())).passed


# Reducible edges ------------------------------------------------------------------


def test_diagonal_square_reports_both_diagonals():
    t, a = square_with_diagonal()
    full = complete_to_G_tilde(t, a)
    assert full.completed_edges == {(1, 3)}
    assert full.theta_tilde[(1, 3)] == 0.0
    assert detect_reducible_edges(t, full) == {(0, 2), (1, 3)}


def test_hex_patch_has_no_reducible_edges():
    t, a, _ = lattice_ball("hex", 3)
    assert detect_reducible_edges(t, a) == frozenset()
    assert complete_to_G_tilde(t, a).completed_edges == frozenset()


def brute_force_reducible(t, a):
    """All zero-angle diagonals of orthogonal 4-cycles, by scanning 4-tuples."""
    full = a.theta_tilde
    right = {e for e, x in full.items() if x == HP}
    out = set()
    for quad in itertools.permutations(t.vertices, 4):
        cyc = [edge_key(quad[i], quad[(i + 1) % 4]) for i in range(4)]
        if all(e in right for e in cyc):
            for d in (edge_key(quad[0], quad[2]), edge_key(quad[1], quad[3])):
                if d in full and full[d] == 0.0:
                    out.add(d)
    return out


def test_square_grid_reducible_edges_match_brute_force():
    t, a, _ = lattice_ball("square-grid", 2)
    assert set(detect_reducible_edges(t, a)) == brute_force_reducible(t, a)
    # One completed partner per complete orthogonal square; fringe diagonals
    # without their square get none.
    right = {e for e in t.edges if a.theta[e] == HP}
    squares = set()
    for quad in itertools.permutations(t.vertices, 4):
        if all(edge_key(quad[i], quad[(i + 1) % 4]) in right for i in range(4)):
            squares.add(frozenset(quad))
    assert len(a.completed_edges) == len(squares) == 10


def test_completion_idempotent():
    t, a, _ = lattice_ball("square-grid", 3)
    once = complete_to_G_tilde(t, AngleAssignment(a.theta))
    twice = complete_to_G_tilde(t, once)
    assert once == twice


def test_completion_conflict_raises():
    # Orthogonal square with both diagonals present but one of them nonzero:
    # faces 0-1-2, 0-2-3 plus the cone over 1-3 through vertex 4.
    t = Triangulation(((0, 1, 2), (0, 2, 3), (1, 3, 2)))
    theta = {e: HP for e in t.edges}
    theta[(0, 2)] = 0.0
    theta[(1, 3)] = 0.3
    with pytest.raises(InconsistentDataError):
        complete_to_G_tilde(t, AngleAssignment(theta))


def test_angle_domain_enforced():
    with pytest.raises(ValueError):
        AngleAssignment({(0, 1): 1.7})
    with pytest.raises(ValueError):
        AngleAssignment({(0, 1): -0.1})


# Conditions ---------------------------------------------------------------------


def test_c1_violation_on_non_facial_triangle():
    # Cone over a triangle: the outer loop 1-2-3 is not a face.
    t = Triangulation(((0, 1, 2), (0, 2, 3), (0, 3, 1)))
    a = AngleAssignment({e: HP for e in t.edges})
    rep = check_c1_c2(t, a)
    assert not rep.passed
    c1 = [e for e in rep.errors if e["kind"] == "C1"]
    assert c1 and c1[0]["angle_sum"] == pytest.approx(1.5 * math.pi)


def test_c2_violation_without_diagonal():
    # An orthogonal 4-cycle 1-2-3-4 around a hub; neither diagonal is an edge.
    t = wheel(4)
    theta = {e: (HP if 0 not in e else 0.0) for e in t.edges}
    rep = check_c1_c2(t, AngleAssignment(theta))
    assert "C2" in kinds(rep)


def test_square_grid_passes_conditions():
    for depth in (2, 3):
        t, a, _ = lattice_ball("square-grid", depth)
        assert check_c1_c2(t, a).passed


def test_missing_angle_reported():
    t = single_triangle()
    rep = check_c1_c2(t, AngleAssignment({(0, 1): 0.0}))
    assert "missing-angle" in kinds(rep)


# Classification ------------------------------------------------------------------------


def test_hex_patch_interior_is_inner_ball():
    t, a, origin = lattice_ball("hex", 3)
    cls = classify_vertices(t, a)
    term = exhaustion("hex", origin, 3, start=3)[-1]
    inner = {v for v, d in term.distance.items() if d <= 2}
    assert {v for v, c in cls.items() if c is VertexClass.INTERIOR} == inner


def test_diagonal_square_corner_is_boundary():
    t, a = square_with_diagonal()
    cls = classify_vertices(t, complete_to_G_tilde(t, a))
    assert cls[0] is VertexClass.BOUNDARY


def test_three_spoke_vertex_with_irreducible_spokes_is_interior():
    t = Triangulation(((0, 1, 2), (0, 2, 3), (0, 3, 1)))
    cls = classify_vertices(t, AngleAssignment.constant(t, 0.0))
    assert cls[0] is VertexClass.INTERIOR
    assert all(cls[v] is VertexClass.BOUNDARY for v in (1, 2, 3))


@pytest.mark.parametrize("name", ["hex", "square-grid", "degree7"])
def test_boundary_cycle_vertices_classified_boundary(name):
    t, a, _ = lattice_ball(name, 3)
    cls = classify_vertices(t, a)
    for cyc in t.boundary_cycles:
        assert all(cls[v] is VertexClass.BOUNDARY for v in cyc)


# Exhaustion ---------------------------------------------------------------------------


def test_hex_exhaustion_balls():
    terms = exhaustion("hex", 0, 3)
    assert [len(x.triangulation.vertices) for x in terms] == [7, 19, 37]
    assert [x.depth for x in terms] == [1, 2, 3]


@pytest.mark.parametrize("name", ["hex", "square-grid", "degree7"])
def test_exhaustion_terms_are_nested_disks(name):
    terms = exhaustion(name, 0, 4)
    prev = set()
    for term in terms:
        t = term.triangulation
        assert validate_complex(t).passed
        assert t.euler_characteristic() == 1
        assert len(t.boundary_cycles) == 1
        assert check_c1_c2(t, term.angles).passed
        verts = set(t.vertices)
        assert prev <= verts
        prev = verts


def test_exhaustion_of_finite_complex_warns_and_truncates():
    t = wheel(6)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        terms = exhaustion((t, AngleAssignment.constant(t, 0.0)), 0, 5)
    assert len(terms) == 1
    assert any(issubclass(w.category, ExhaustionWarning) for w in caught)


@given(st.integers(1, 5), st.sampled_from(["hex", "square-grid"]))
def test_euler_characteristic_property(depth, name):
    t, _, _ = lattice_ball(name, depth)
    assert t.euler_characteristic() == 1
