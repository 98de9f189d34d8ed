from __future__ import annotations

from datetime import datetime, timezone

import numpy as np
import pytest

from wxdiag.grid import GridField

T0 = datetime(2014, 5, 8, 12, 0, tzinfo=timezone.utc)


def make_field(*, name="t", units="K", times=(T0,), levels=(500.0,),
               lats=None, lons=None, values=None, mask=False) -> GridField:
    """Keyword-only builder with small dense defaults."""
    if lats is None:
        lats = np.linspace(20.0, 30.0, 11)
    if lons is None:
        lons = np.linspace(100.0, 110.0, 11)
    lats = np.asarray(lats, dtype=float)
    lons = np.asarray(lons, dtype=float)
    if values is None:
        values = np.zeros((len(times), len(levels), lats.size, lons.size))
    return GridField(name=name, units=units, times=tuple(times), levels=tuple(levels),
                     lats=lats, lons=lons, values=values, mask=mask)


def wave_wind_pair(n: int, lat0=20.0, lat1=40.0, lon0=100.0, lon1=120.0):
    """Smooth wavy (u, v) on an n x n grid, for truncation-error measurements."""
    lats = np.linspace(lat0, lat1, n)
    lons = np.linspace(lon0, lon1, n)
    lam = np.deg2rad(lons)[None, None, None, :]
    phi = np.deg2rad(lats)[None, None, :, None]
    shape = (1, 1, n, n)
    u = 10.0 * np.sin(3.0 * lam) * np.cos(2.0 * phi) * np.ones(shape)
    v = 5.0 * np.cos(2.0 * lam) * np.sin(3.0 * phi) * np.ones(shape)
    fu = make_field(name="u", units="m s-1", lats=lats, lons=lons, values=u)
    fv = make_field(name="v", units="m s-1", lats=lats, lons=lons, values=v)
    return fu, fv


@pytest.fixture
def rng():
    return np.random.default_rng(20140508)
