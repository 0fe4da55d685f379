import re
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from diskpattern.complex import AngleAssignment
from diskpattern.generators import wheel
from diskpattern.layout import PlacedPattern
from diskpattern.render import RenderStyle, render_svg
from diskpattern.uniformize import max_pack_hyperbolic

from helpers import placed_patch

GOLDEN = Path(__file__).resolve().parent / "golden"
NS = "{http://www.w3.org/2000/svg}"
SEGMENTS = RenderStyle(show_segments=True)


def golden_cases():
    return {"hex2.svg": (placed_patch("hex", 2)[3], RenderStyle()),
            "square2_segments.svg": (placed_patch("square-grid", 2)[3], SEGMENTS)}


@pytest.mark.parametrize("name", ["hex2.svg", "square2_segments.svg"])
def test_golden(name):
    p, style = golden_cases()[name]
    assert render_svg(p, style) == (GOLDEN / name).read_bytes()


def test_deterministic():
    p = placed_patch("hex", 3)[3]
    assert render_svg(p, SEGMENTS) == render_svg(p, SEGMENTS)


def test_one_circle_per_disk_and_viewbox():
    t, a, r, p = placed_patch("hex", 3)
    root = ET.fromstring(render_svg(p))
    circles = root.findall(f".//{NS}circle")
    assert len(circles) == len(t.vertices)
    x, y, w, h = map(float, root.get("viewBox").split())
    cs, rs = p.centers_float(), p.radii_float()
    width = (cs.real + rs).max() - (cs.real - rs).min()
    assert w == pytest.approx(1.1 * width, rel=1e-8)
    assert x == pytest.approx((cs.real - rs).min() - 0.05 * width, rel=1e-8)


def test_segments_dashed_for_completed():
    t, a, r, p = placed_patch("square-grid", 2)
    root = ET.fromstring(render_svg(p, SEGMENTS))
    lines = root.findall(f".//{NS}line")
    assert len(lines) == len(p.edges)
    dashed = [x for x in lines if x.get("stroke-dasharray")]
    assert len(dashed) == len(a.completed_edges)
    root = ET.fromstring(render_svg(p, RenderStyle(show_segments=True, show_reduced=False)))
    assert len(root.findall(f".//{NS}line")) == len(a.completed_edges)


def test_nine_significant_digits():
    p = placed_patch("hex", 2)[3]
    text = render_svg(p).decode()
    for num in re.findall(r'"(-?[0-9.e+-]+)"', text):
        digits = num.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 9


def test_labels_and_unit_circle():
    t = wheel(6)
    p = max_pack_hyperbolic(t, AngleAssignment.constant(t, 0.0), 0)
    root = ET.fromstring(render_svg(p, RenderStyle(labels=True)))
    assert len(root.findall(f".//{NS}text")) == 7
    assert len(root.findall(f".//{NS}circle")) == 8


def test_style_from_pairs():
    s = RenderStyle.from_pairs(["stroke-width=2", "labels=yes", "fill_opacity=0.5"])
    assert s.stroke_width == 2.0 and s.labels and s.fill_opacity == 0.5
    for bad in (["stroke_width"], ["colour=red"], ["labels=maybe"], ["stroke_width=-1"], ["fill_opacity=2"]):
        with pytest.raises(ValueError):
            RenderStyle.from_pairs(bad)


def test_empty_pattern():
    import numpy as np
    from diskpattern.geometry import Geometry
    p = PlacedPattern(Geometry.EUCLIDEAN, [], np.zeros(0, complex), np.zeros(0), [], {})
    with pytest.raises(ValueError):
        render_svg(p)
