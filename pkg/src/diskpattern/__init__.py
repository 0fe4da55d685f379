"""Disk patterns with prescribed intersection angles: solving, layout,
resistor networks and vertex extremal length."""

__version__ = "0.1.0"

from .complex import (AngleAssignment, Triangulation, check_c1_c2, classify_vertices, complete_to_G_tilde,
                      detect_reducible_edges, exhaustion, validate_complex)
from .extremal import mod_separating, serial_lower_bound, type_classify, vel_between, annulus_bound_check
from .geometry import Geometry, center_distance, dphi_dlogrho, triple_angles
from .layout import PlacedPattern, layout
from .network import UNBOUNDED, conductances, effective_resistance, solve_dirichlet
from .render import RenderStyle, render_svg
from .solver import RadiusVector, SolveOptions, curvature, solve
from .specfile import parse_spec, serialize_spec
from .uniformize import exhaust_uniformize, max_pack_hyperbolic, rigidity_experiment, ring_lemma_check

__all__ = [
    "AngleAssignment", "Triangulation", "check_c1_c2", "classify_vertices", "complete_to_G_tilde",
    "detect_reducible_edges", "exhaustion", "validate_complex", "mod_separating", "serial_lower_bound",
    "type_classify", "vel_between", "annulus_bound_check", "Geometry", "center_distance", "dphi_dlogrho",
    "triple_angles", "PlacedPattern", "layout", "UNBOUNDED", "conductances", "effective_resistance",
    "solve_dirichlet", "RenderStyle", "render_svg", "RadiusVector", "SolveOptions", "curvature", "solve",
    "parse_spec", "serialize_spec", "exhaust_uniformize", "max_pack_hyperbolic", "rigidity_experiment",
    "ring_lemma_check",
]
