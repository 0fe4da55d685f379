"""Shared fixtures: solved lattice patches."""
import math
from functools import lru_cache

from diskpattern.complex import boundary_of
from diskpattern.generators import lattice_ball
from diskpattern.layout import layout
from diskpattern.solver import solve

SQRT_HALF = math.sqrt(0.5)


def boundary_value(name):
    return SQRT_HALF if name == "square-grid" else 1.0


@lru_cache(maxsize=None)
def solved_patch(name, depth, value=None):
    """(t, a, radii, report) with constant boundary radius."""
    t, a, origin = lattice_ball(name, depth)
    value = boundary_value(name) if value is None else value
    r, rep = solve(t, a, {v: value for v in boundary_of(t, a)})
    return t, a, r, rep


@lru_cache(maxsize=None)
def placed_patch(name, depth):
    t, a, r, _ = solved_patch(name, depth)
    return t, a, r, layout(t, a, r)
