import numpy as np
import pytest

from conftest import make_field
from wxdiag.plotspec import build_plot_spec
from wxdiag.render import (RenderError, barb_glyph, colormap_rgb,
                           contour_levels_from_interval, gaussian_smooth,
                           marching_squares, parse_field_ref, render_svg,
                           slice_2d)


def synoptic_fields():
    lats = np.linspace(20.0, 30.0, 11)
    lons = np.linspace(100.0, 110.0, 11)
    lat2 = lats[None, None, :, None]
    lon2 = lons[None, None, None, :]
    shape = (1, 1, 11, 11)
    z = 5600.0 + 8.0 * (lat2 - 25.0) ** 2 * np.ones(shape) - 2.0 * (lon2 - 100.0)
    msl = (1000.0 + (lat2 - 20.0) * np.ones(shape)) + 0.0 * lon2
    u = np.full(shape, 10.0)
    v = np.full(shape, 0.0)
    return {
        "z@500": make_field(name="z", units="gpm", levels=(500.0,),
                            lats=lats, lons=lons, values=z),
        "msl@0": make_field(name="msl", units="hPa", levels=(0.0,),
                            lats=lats, lons=lons, values=msl),
        "u@850": make_field(name="u", units="m s-1", levels=(850.0,),
                            lats=lats, lons=lons, values=u),
        "v@850": make_field(name="v", units="m s-1", levels=(850.0,),
                            lats=lats, lons=lons, values=v),
    }


# -- smoothing ---------------------------------------------------------------

def test_smooth_sigma_zero_is_identity():
    data = np.arange(25.0).reshape(5, 5)
    out = gaussian_smooth(data, 0.0)
    assert np.array_equal(out, data)
    assert out is not data


def test_smooth_preserves_constants():
    data = np.full((8, 8), 3.25)
    assert np.allclose(gaussian_smooth(data, 2.0), 3.25, atol=1e-12)


def test_smooth_reduces_variance(rng):
    data = rng.normal(size=(30, 30))
    assert gaussian_smooth(data, 2.0).var() < 0.5 * data.var()


def test_smooth_rejects_bad_input():
    with pytest.raises(RenderError):
        gaussian_smooth(np.array([[1.0, np.nan]]), 1.0)
    with pytest.raises(RenderError):
        gaussian_smooth(np.ones((3, 3)), -1.0)


# -- contour extraction ------------------------------------------------------

def test_levels_from_interval():
    values = np.array([0.3, 1.7])
    assert contour_levels_from_interval(values, 0.5) == [0.5, 1.0, 1.5]
    with pytest.raises(RenderError):
        contour_levels_from_interval(values, 0.0)


def test_contour_of_linear_field_is_exact():
    lats = np.linspace(20.0, 30.0, 11)
    lons = np.linspace(100.0, 110.0, 11)
    values = np.broadcast_to(lats[:, None], (11, 11))
    lines = marching_squares(lons, lats, values, 25.0)
    assert len(lines) == 1
    (line,) = lines
    assert all(abs(y - 25.0) < 1e-9 for _, y in line)
    xs = [x for x, _ in line]
    assert min(xs) == 100.0 and max(xs) == 110.0


def test_contour_interpolates_between_nodes():
    lats = np.linspace(0.0, 1.0, 2)
    lons = np.linspace(0.0, 1.0, 2)
    values = np.array([[0.0, 0.0], [1.0, 1.0]])
    (line,) = marching_squares(lons, lats, values, 0.25)
    assert all(abs(y - 0.25) < 1e-12 for _, y in line)


def test_contour_around_bump_closes():
    lats = np.linspace(20.0, 30.0, 21)
    lons = np.linspace(100.0, 110.0, 21)
    la, lo = np.meshgrid(lats, lons, indexing="ij")
    values = 10.0 * np.exp(-((la - 25.0) ** 2 + (lo - 105.0) ** 2) / (2 * 2.0 ** 2))
    (line,) = marching_squares(lons, lats, values, 5.0)
    assert line[0] == line[-1]
    assert len(line) > 8


def test_contour_level_outside_range_is_empty():
    lats = np.linspace(0.0, 1.0, 3)
    values = np.zeros((3, 3))
    assert marching_squares(lats, lats, values, 5.0) == []


def test_contour_rejects_mismatched_axes():
    with pytest.raises(RenderError):
        marching_squares(np.arange(4.0), np.arange(3.0), np.zeros((3, 3)), 0.5)


# -- barbs and colors --------------------------------------------------------

def test_calm_wind_draws_a_circle():
    assert "<circle" in barb_glyph(10.0, 10.0, 1.0, 0.5, 5.5, 0.6)


def test_barb_feather_counts():
    glyph = barb_glyph(50.0, 50.0, 25.0, 0.0, 5.5, 0.6)
    assert glyph.count("<path") == 4          # shaft + two full barbs + one half
    assert glyph.count("<polygon") == 0
    glyph = barb_glyph(50.0, 50.0, 65.0, 0.0, 5.5, 0.6)
    assert glyph.count("<polygon") == 1       # one pennant
    assert glyph.count("<path") == 3          # shaft + one full + one half


def test_barb_rounds_to_nearest_five():
    # 7.4 m/s rounds to 5: a single half barb
    glyph = barb_glyph(0.0, 0.0, 7.4, 0.0, 5.5, 0.6)
    assert glyph.count("<path") == 2


def test_colormap_endpoints_and_clamping():
    assert colormap_rgb("blues", 0.0) == "#f7fbff"
    assert colormap_rgb("blues", 1.0) == "#08306b"
    assert colormap_rgb("blues", -3.0) == colormap_rgb("blues", 0.0)
    with pytest.raises(RenderError):
        colormap_rgb("viridis", 0.5)


# -- field refs --------------------------------------------------------------

def test_parse_field_ref():
    assert parse_field_ref("z@500") == ("z", 500.0)
    assert parse_field_ref("msl") == ("msl", None)
    with pytest.raises(RenderError):
        parse_field_ref("z@abc")


def test_slice_picks_requested_level():
    values = np.stack([np.full((11, 11), 1.0), np.full((11, 11), 2.0)])[None]
    field = make_field(name="t", levels=(850.0, 500.0), values=values)
    assert slice_2d(field, "t@500")[0, 0] == 2.0
    with pytest.raises(RenderError):
        slice_2d(field, "t@300")
    with pytest.raises(RenderError):
        slice_2d(field, "t")      # two levels, no pin


# -- document assembly -------------------------------------------------------

def test_render_is_deterministic():
    spec = build_plot_spec("synoptic_z500_msl_barbs", subtitle="valid 12Z")
    fields = synoptic_fields()
    assert render_svg(spec, fields) == render_svg(spec, fields)


def test_render_structure():
    spec = build_plot_spec("synoptic_z500_msl_barbs", title="T & <demo>",
                           subtitle="2014-05-08T12:00Z")
    svg = render_svg(spec, synoptic_fields())
    assert svg.startswith("<svg ") and svg.endswith("</svg>")
    assert 'data-scale="250"' in svg
    assert "T &amp; &lt;demo&gt;" in svg
    assert "2014-05-08T12:00Z" in svg
    assert svg.count("<rect") > 100           # shading cells plus colorbar
    assert "<polyline" in svg                 # MSLP contours
    assert "500-hPa height (gpm)" in svg      # colorbar label
    assert svg.count("<path") >= 9            # wind barbs at step 4 on 11x11


def test_render_missing_field_fails():
    spec = build_plot_spec("synoptic_z500_msl_barbs")
    fields = synoptic_fields()
    del fields["msl@0"]
    with pytest.raises(RenderError, match="msl@0"):
        render_svg(spec, fields)


def test_render_accepts_bare_variable_keys():
    spec = build_plot_spec("synoptic_z500_msl_barbs")
    fields = {parse_field_ref(k)[0]: v for k, v in synoptic_fields().items()}
    svg = render_svg(spec, fields)
    assert "</svg>" in svg
