import math

import pytest
from hypothesis import given, strategies as st

from diskpattern.complex import check_c1_c2, exhaustion, validate_complex
from diskpattern.generators import (DegreeSeven, HexLattice, PerturbedAngles, SquareGrid, as_generator,
                                    decode, encode, lattice_ball, make_generator, single_triangle, wheel)


@given(st.integers(-10_000, 10_000), st.integers(-10_000, 10_000))
def test_encode_decode_round_trip(i, j):
    assert decode(encode(i, j)) == (i, j)


def test_encode_origin_is_zero():
    assert encode(0, 0) == 0


@pytest.mark.parametrize("gen,degree", [(HexLattice(), 6), (SquareGrid(), None), (DegreeSeven(), 7)])
def test_vertex_degrees(gen, degree):
    gen.ensure_depth(0, 4)
    verts = exhaustion(gen, 0, 3, start=3)[-1].distance
    degs = [len(gen.neighbors(v)) for v in verts]
    if degree is None:
        # Square grid with one diagonal per square: degrees 4 + {0, 1, 2} alternate.
        assert set(degs) <= {4, 5, 6, 8} and min(degs) >= 4
    else:
        assert set(degs) == {degree}


@pytest.mark.parametrize("gen", [HexLattice(), SquareGrid(), DegreeSeven()])
def test_faces_contain_vertex_and_are_edges(gen):
    gen.ensure_depth(0, 3)
    for v in exhaustion(gen, 0, 2, start=2)[-1].distance:
        fs = gen.faces_at(v)
        nb = set(gen.neighbors(v))
        assert len(fs) == len(nb)
        for f in fs:
            assert v in f
            assert set(f) - {v} <= nb


def test_hex_positions_are_unit_spaced():
    g = HexLattice()
    for w in g.neighbors(0):
        x, y = g.position(w)
        assert math.hypot(x, y) == pytest.approx(2.0)


def test_square_grid_angles():
    t, a, origin = lattice_ball("square-grid", 2)
    g = SquareGrid()
    for u, v in t.edges:
        (x1, y1), (x2, y2) = g.position(u), g.position(v)
        axis = (x1 == x2) or (y1 == y2)
        assert a.theta[(u, v)] == (math.pi / 2 if axis else 0.0)


def test_degree_seven_ring_sizes_grow_exponentially():
    g = DegreeSeven()
    g.ensure_depth(0, 5)
    sizes = [len(r) for r in g.rings[:6]]
    assert sizes[:2] == [1, 7]
    ratios = [b / a for a, b in zip(sizes[1:], sizes[2:])]
    assert all(r > 2.0 for r in ratios)


def test_degree_seven_rejects_other_center():
    with pytest.raises(ValueError):
        DegreeSeven().ensure_depth(3, 2)


def test_make_generator_unknown():
    with pytest.raises(ValueError):
        make_generator("pentagonal")


def test_as_generator_dispatch():
    assert isinstance(as_generator("hex"), HexLattice)
    t = wheel(5)
    assert as_generator(t).neighbors(0) == [1, 2, 3, 4, 5]
    with pytest.raises(TypeError):
        as_generator(3.5)


def test_wheel_and_triangle():
    assert validate_complex(wheel(6)).passed
    assert len(wheel(6).faces) == 6
    assert validate_complex(single_triangle()).passed


def test_perturbed_angles_reproducible_and_in_range():
    a = PerturbedAngles(HexLattice(), max_angle=1.0, seed=4)
    b = PerturbedAngles(HexLattice(), max_angle=1.0, seed=4)
    c = PerturbedAngles(HexLattice(), max_angle=1.0, seed=5)
    vals = [a.theta(0, w) for w in a.neighbors(0)]
    assert vals == [b.theta(w, 0) for w in a.neighbors(0)]
    assert vals != [c.theta(0, w) for w in a.neighbors(0)]
    assert all(0 <= x <= 1.0 for x in vals)


def test_perturbed_angles_rejects_right_angles():
    with pytest.raises(ValueError):
        PerturbedAngles(HexLattice(), max_angle=math.pi / 2)


def test_perturbed_balls_pass_conditions():
    terms = exhaustion(PerturbedAngles(HexLattice(), seed=1), 0, 3)
    assert all(check_c1_c2(x.triangulation, x.angles).passed for x in terms)
