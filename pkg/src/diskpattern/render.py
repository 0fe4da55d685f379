"""Deterministic SVG drawings of placed patterns."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, List
from xml.sax.saxutils import escape

import numpy as np

from .geometry import Geometry
from .layout import PlacedPattern

MARGIN = 0.05
CANVAS = 800.0


@dataclass(frozen=True)
class RenderStyle:
    stroke_width: float = 1.0
    segment_width: float = 0.75
    fill_opacity: float = 0.15
    labels: bool = False
    show_reduced: bool = True
    show_segments: bool = False
    show_unit_circle: bool = True

    def __post_init__(self):
        for name in ("stroke_width", "segment_width"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.fill_opacity <= 1.0:
            raise ValueError("fill_opacity must lie in [0, 1]")

    @classmethod
    def from_pairs(cls, pairs: List[str]) -> "RenderStyle":
        """Build from KEY=VALUE strings."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs: Dict[str, object] = {}
        for item in pairs:
            if "=" not in item:
                raise ValueError(f"style entry {item!r} is not KEY=VALUE")
            key, val = item.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown style key {key!r}; choose from {sorted(types)}")
            if "bool" in str(types[key]):
                low = val.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                    raise ValueError(f"style {key} expects a boolean")
                kwargs[key] = low in ("true", "1", "yes", "on")
            else:
                kwargs[key] = float(val)
        return cls(**kwargs)


def _num(x: float) -> str:
    s = f"{float(x):.9g}"
    return "0" if s == "-0" else s


def render_svg(p: PlacedPattern, style: RenderStyle = RenderStyle()) -> bytes:
    """One circle per disk plus optional center segments; solid for the
    reduced graph, dashed for completed diagonals."""
    if not p.vertices:
        raise ValueError("cannot render an empty pattern")
    cs = p.centers_float()
    rs = p.radii_float()
    # Flip y so the picture keeps the mathematical orientation.
    xs, ys = cs.real, -cs.imag
    lo_x, hi_x = float(np.min(xs - rs)), float(np.max(xs + rs))
    lo_y, hi_y = float(np.min(ys - rs)), float(np.max(ys + rs))
    if p.geometry is Geometry.HYPERBOLIC and style.show_unit_circle:
        lo_x, lo_y = min(lo_x, -1.0), min(lo_y, -1.0)
        hi_x, hi_y = max(hi_x, 1.0), max(hi_y, 1.0)
    w, h = hi_x - lo_x, hi_y - lo_y
    # Rounding noise far below the drawing scale would make output platform dependent.
    tiny = 1e-9 * max(w, h)
    xs = np.where(np.abs(xs) < tiny, 0.0, xs)
    ys = np.where(np.abs(ys) < tiny, 0.0, ys)
    pad = MARGIN * max(w, h)
    vb = (lo_x - pad, lo_y - pad, w + 2 * pad, h + 2 * pad)
    unit = max(vb[2], vb[3]) / CANVAS
    width = CANVAS * vb[2] / max(vb[2], vb[3])
    height = CANVAS * vb[3] / max(vb[2], vb[3])
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(width)}" height="{_num(height)}" '
           f'viewBox="{" ".join(_num(x) for x in vb)}">']
    if p.geometry is Geometry.HYPERBOLIC and style.show_unit_circle:
        out.append(f'<circle cx="0" cy="0" r="1" fill="none" stroke="#444444" '
                   f'stroke-width="{_num(style.stroke_width * unit)}"/>')
    out.append(f'<g fill="#3b73b9" fill-opacity="{_num(style.fill_opacity)}" stroke="#1d3a5c" '
               f'stroke-width="{_num(style.stroke_width * unit)}">')
    for k, v in enumerate(p.vertices):
        out.append(f'<circle id="v{v}" cx="{_num(xs[k])}" cy="{_num(ys[k])}" r="{_num(rs[k])}"/>')
    out.append("</g>")
    if style.show_segments:
        sw = _num(style.segment_width * unit)
        out.append(f'<g stroke="#b03a2e" stroke-width="{sw}" fill="none">')
        for u, v in sorted(p.edges):
            dashed = (u, v) in p.completed
            if not dashed and not style.show_reduced:
                continue
            i, j = p.index[u], p.index[v]
            dash = f' stroke-dasharray="{_num(4 * unit)} {_num(3 * unit)}"' if dashed else ""
            out.append(f'<line x1="{_num(xs[i])}" y1="{_num(ys[i])}" x2="{_num(xs[j])}" '
                       f'y2="{_num(ys[j])}"{dash}/>')
        out.append("</g>")
    if style.labels:
        fs = _num(10 * unit)
        out.append(f'<g font-family="sans-serif" font-size="{fs}" text-anchor="middle" fill="#000000">')
        for k, v in enumerate(p.vertices):
            out.append(f'<text x="{_num(xs[k])}" y="{_num(ys[k])}">{escape(str(v))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")
