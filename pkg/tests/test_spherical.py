from __future__ import annotations

import numpy as np
import pytest

from wxdiag.constants import EARTH_RADIUS
from wxdiag.grid import GridError, GridDataError, GridSpec, gen_analytic
from wxdiag.spherical import (
    SphericalGridSpec,
    advection,
    divergence,
    frontogenesis,
    horizontal_gradient,
    moisture_flux_divergence,
    vorticity,
    wind_speed,
)

from conftest import make_field, wave_wind_pair


def linear_field(name, slope_per_rad, axis, base=0.0, n=21,
                 lat0=20.0, lat1=40.0, lon0=100.0, lon1=120.0, units="K"):
    """f = base + slope * (lat or lon in radians)."""
    lats = np.linspace(lat0, lat1, n)
    lons = np.linspace(lon0, lon1, n)
    coord = np.deg2rad(lats)[:, None] if axis == "lat" else np.deg2rad(lons)[None, :]
    values = (base + slope_per_rad * coord) * np.ones((n, n))
    return make_field(name=name, units=units, lats=lats, lons=lons,
                      values=values[None, None])


def uniform_wind(u0, v0, n=21, **kw):
    lats = np.linspace(kw.get("lat0", 20.0), kw.get("lat1", 40.0), n)
    lons = np.linspace(kw.get("lon0", 100.0), kw.get("lon1", 120.0), n)
    u = make_field(name="u", units="m s-1", lats=lats, lons=lons,
                   values=np.full((1, 1, n, n), float(u0)))
    v = make_field(name="v", units="m s-1", lats=lats, lons=lons,
                   values=np.full((1, 1, n, n), float(v0)))
    return u, v


class TestGradient:
    def test_zonal_linear_field_exact(self):
        f = linear_field("t", 50.0, "lon")
        gx, gy = horizontal_gradient(f)
        i = 10   # 30 N
        expected = 50.0 / (EARTH_RADIUS * np.cos(np.deg2rad(30.0)))
        assert gx.values[0, 0, i, :] == pytest.approx(expected, rel=1e-12)
        assert np.abs(gy.values).max() == pytest.approx(0.0, abs=1e-18)

    def test_meridional_linear_field_exact(self):
        f = linear_field("t", -30.0, "lat")
        gx, gy = horizontal_gradient(f)
        assert gy.values == pytest.approx(-30.0 / EARTH_RADIUS, rel=1e-12)
        assert np.abs(gx.values).max() == pytest.approx(0.0, abs=1e-18)


class TestVorticityDivergence:
    def test_solid_body_vorticity_within_half_percent(self):
        spec = GridSpec(35, 55, 21, 100, 120, 21)
        u, v = gen_analytic("solid_body_rotation", {"u0": 10.0}, spec)
        zeta = vorticity(u, v)
        i = np.nonzero(np.isclose(u.lats, 45.0))[0][0]
        analytic = 2.0 * 10.0 * np.sin(np.deg2rad(45.0)) / EARTH_RADIUS
        assert zeta.values[0, 0, i, 10] == pytest.approx(analytic, rel=5e-3)
        assert analytic == pytest.approx(2.2198e-6, rel=1e-3)

    def test_solid_body_divergence_vanishes(self):
        spec = GridSpec(35, 55, 21, 100, 120, 21)
        u, v = gen_analytic("solid_body_rotation", {"u0": 10.0}, spec)
        assert np.abs(divergence(u, v).values).max() < 1e-8

    def test_second_order_interior_convergence(self):
        errors = {}
        for n in (21, 41):
            fu, fv = wave_wind_pair(n)
            lam = np.deg2rad(fu.lons)[None, :]
            phi = np.deg2rad(fu.lats)[:, None]
            cos, sin = np.cos(phi), np.sin(phi)
            dv_dlam = -10.0 * np.sin(2 * lam) * np.sin(3 * phi)
            du_cos_dphi = 10.0 * np.sin(3 * lam) * (-2 * np.sin(2 * phi) * cos
                                                    - np.cos(2 * phi) * sin)
            zeta_true = (dv_dlam - du_cos_dphi) / (EARTH_RADIUS * cos)
            du_dlam = 30.0 * np.cos(3 * lam) * np.cos(2 * phi)
            dv_cos_dphi = 5.0 * np.cos(2 * lam) * (3 * np.cos(3 * phi) * cos
                                                   - np.sin(3 * phi) * sin)
            div_true = (du_dlam + dv_cos_dphi) / (EARTH_RADIUS * cos)
            ez = np.abs(vorticity(fu, fv).values[0, 0] - zeta_true)[1:-1, 1:-1].max()
            ed = np.abs(divergence(fu, fv).values[0, 0] - div_true)[1:-1, 1:-1].max()
            errors[n] = (ez, ed)
        assert errors[21][0] / errors[41][0] >= 3.5
        assert errors[21][1] / errors[41][1] >= 3.5


class TestAdvection:
    def test_uniform_wind_on_zonal_gradient(self):
        t = linear_field("t", 40.0, "lon")
        u, v = uniform_wind(12.0, 0.0)
        adv = advection(t, u, v)
        i = 10
        expected = -12.0 * 40.0 / (EARTH_RADIUS * np.cos(np.deg2rad(30.0)))
        assert adv.values[0, 0, i, :] == pytest.approx(expected, rel=1e-12)

    def test_sign_convention_warm_advection_positive(self):
        # wind blowing from warm toward cold must yield positive advection
        t = linear_field("t", -40.0, "lon")       # temperature falls eastward
        u, v = uniform_wind(12.0, 0.0)            # westerly wind
        assert advection(t, u, v).values.min() > 0.0


class TestFrontogenesis:
    def test_pure_deformation_closed_form(self):
        rate = 1e-5
        spec = GridSpec(20, 40, 21, 100, 120, 21)
        u, v = gen_analytic("pure_deformation",
                            {"rate": rate, "center_lat": 30.0, "center_lon": 110.0}, spec)
        slope = -60.0   # theta falls northward: strong front
        theta = linear_field("theta", slope, "lat")
        front = frontogenesis(theta, u, v)
        expected = rate * abs(slope) / EARTH_RADIUS
        assert front.values == pytest.approx(expected, rel=1e-9)

    def test_flat_theta_hits_gradient_floor(self):
        spec = GridSpec(20, 40, 21, 100, 120, 21)
        u, v = gen_analytic("pure_deformation",
                            {"rate": 1e-5, "center_lat": 30.0, "center_lon": 110.0}, spec)
        theta = make_field(name="theta", lats=u.lats, lons=u.lons,
                           values=np.full(u.shape, 300.0))
        assert np.abs(frontogenesis(theta, u, v).values).max() == 0.0


class TestMoistureFlux:
    def test_uniform_q_reduces_to_q_times_divergence(self):
        n = 21
        lats = np.linspace(-5.0, 5.0, n)
        lons = np.linspace(170.0, 190.0, n)
        lam = np.deg2rad(lons)[None, None, None, :]
        u = make_field(name="u", units="m s-1", lats=lats, lons=lons,
                       values=np.broadcast_to(8.0 * np.sin(lam), (1, 1, n, n)).copy())
        v = make_field(name="v", units="m s-1", lats=lats, lons=lons,
                       values=np.zeros((1, 1, n, n)))
        q = make_field(name="q", units="kg kg-1", lats=lats, lons=lons,
                       values=np.full((1, 1, n, n), 0.012))
        mfd = moisture_flux_divergence(q, u, v)
        assert np.allclose(mfd.values, 0.012 * divergence(u, v).values)

    def test_advective_term(self):
        q = linear_field("q", 0.02, "lon", units="kg kg-1")
        u, v = uniform_wind(10.0, 0.0)
        mfd = moisture_flux_divergence(q, u, v)
        i = 10
        expected = 10.0 * 0.02 / (EARTH_RADIUS * np.cos(np.deg2rad(30.0)))
        assert mfd.values[0, 0, i, :] == pytest.approx(expected, rel=1e-9)


class TestGuards:
    def test_wind_speed(self):
        u, v = uniform_wind(3.0, 4.0)
        assert wind_speed(u, v).values == pytest.approx(5.0)

    def test_mismatched_grids_rejected(self):
        u, _ = uniform_wind(1.0, 1.0)
        _, v = uniform_wind(1.0, 1.0, lon0=101.0, lon1=121.0)
        with pytest.raises(GridDataError):
            vorticity(u, v)

    def test_masked_input_rejected(self):
        u, v = uniform_wind(1.0, 1.0)
        masked = make_field(name="u", units="m s-1", lats=u.lats, lons=u.lons,
                            values=np.zeros(u.shape), mask=True)
        with pytest.raises(GridDataError):
            divergence(masked, v)

    def test_pole_rejected(self):
        lats = np.linspace(80.0, 90.0, 5)
        lons = np.linspace(0.0, 10.0, 5)
        f = make_field(lats=lats, lons=lons, values=np.zeros((1, 1, 5, 5)))
        with pytest.raises(GridError):
            horizontal_gradient(f)

    def test_nonuniform_spacing_rejected(self):
        lats = np.array([20.0, 21.0, 23.0, 26.0, 30.0])
        f = make_field(lats=lats, lons=np.linspace(100, 104, 5),
                       values=np.zeros((1, 1, 5, 5)))
        with pytest.raises(GridError):
            horizontal_gradient(f)

    def test_grid_too_small(self):
        f = make_field(lats=[20.0, 21.0], lons=[100.0, 101.0, 102.0],
                       values=np.zeros((1, 1, 2, 3)))
        with pytest.raises(GridError):
            SphericalGridSpec.from_field(f)
