import numpy as np
import pytest

from geom import planar_patch
from plaquemesh.errors import ValidationError
from plaquemesh.unfold import lscm_unfold
from plaquemesh.svgrender import ramp_color, render_svg, write_svg


def _patch(vwt):
    mesh = planar_patch(nx=3, ny=2, width=2.0, height=1.0).with_attribute(
        "vwt", np.asarray(vwt, dtype=float)
    )
    return lscm_unfold(mesh)


def test_uniform_field_single_mid_ramp_color():
    patch = _patch([1.0] * 6)
    svg = render_svg(patch, (0.0, 2.0))
    mid = ramp_color(0.5)
    assert mid == "#21918c"  # frozen mid-ramp reference color
    assert svg.count(f'fill="{mid}"') == patch.triangles.shape[0]
    assert "linearGradient" not in svg


def test_gradient_spans_full_ramp():
    patch = _patch([0.0, 0.0, 2.0, 2.0, 0.0, 2.0][: 6])
    svg = render_svg(patch, (0.0, 2.0))
    assert "linearGradient" in svg
    assert ramp_color(0.0) in svg
    assert ramp_color(1.0) in svg


def test_byte_determinism(tmp_path):
    patch = _patch(np.linspace(0.2, 1.7, 6))
    write_svg(patch, (0.0, 2.0), tmp_path / "a.svg")
    write_svg(patch, (0.0, 2.0), tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_degenerate_range_rejected():
    patch = _patch([1.0] * 6)
    with pytest.raises(ValidationError):
        render_svg(patch, (1.0, 1.0))


def test_legend_and_scale_bar_present():
    patch = _patch(np.linspace(0, 2, 6))
    svg = render_svg(patch, (0.0, 2.0))
    assert "VWT mm" in svg
    assert "mm</text>" in svg
    assert svg.startswith('<?xml version="1.0"')
    assert svg.rstrip().endswith("</svg>")


def test_ramp_endpoints():
    assert ramp_color(0.0) == "#440154"
    assert ramp_color(1.0) == "#fde725"
    assert ramp_color(-5.0) == ramp_color(0.0)  # clamped
    assert ramp_color(7.0) == ramp_color(1.0)
