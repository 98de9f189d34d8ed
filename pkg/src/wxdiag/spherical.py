"""Finite-difference kernels on regular latitude/longitude grids.

All operators use centered differences on interior nodes and one-sided
differences on the edges, with the spherical metric applied afterwards:

    df/dx = (1 / (a cos(phi))) * df/dlambda
    df/dy = (1 / a) * df/dphi

Inputs are :class:`~wxdiag.grid.GridField` blocks; the lat/lon axes must be
uniformly spaced, co-registered between arguments, dense (unmasked) and at
least 3 nodes long per horizontal axis.  Grids touching the poles are
rejected because the x-metric divides by cos(phi).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants
from .grid import GridDataError, GridError, GridField, require_same_grid, require_unmasked

FRONTOGENESIS_GRADIENT_FLOOR = 1e-10  # K m-1; below this the function is defined as 0


@dataclass(frozen=True)
class SphericalGridSpec:
    """Sphere radius plus angular spacings in radians (signed, axis order)."""

    a: float = constants.EARTH_RADIUS
    dlam: float = 0.0
    dphi: float = 0.0

    @classmethod
    def from_field(cls, field: GridField, a: float = constants.EARTH_RADIUS) -> "SphericalGridSpec":
        if field.lats.size < 3 or field.lons.size < 3:
            raise GridError("operators need at least 3 nodes per horizontal axis")
        dlat = np.diff(field.lats)
        dlon = np.diff(field.lons)
        if not np.allclose(dlat, dlat[0], rtol=1e-6, atol=1e-12) or \
           not np.allclose(dlon, dlon[0], rtol=1e-6, atol=1e-12):
            raise GridError("operators require uniform axis spacing")
        return cls(a=a, dlam=np.deg2rad(dlon[0]), dphi=np.deg2rad(dlat[0]))


def _prepare(*fields: GridField) -> tuple[SphericalGridSpec, np.ndarray]:
    require_unmasked(*fields)
    require_same_grid(*fields)
    first = fields[0]
    if np.isclose(np.abs(first.lats), 90.0, rtol=0, atol=1e-9).any():
        raise GridError("grid touches a pole; x-derivatives are undefined there")
    spec = SphericalGridSpec.from_field(first)
    cos_phi = np.cos(np.deg2rad(first.lats))[None, None, :, None]
    return spec, cos_phi


def _diff(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Centered interior, one-sided edges, along the given axis."""
    out = np.empty_like(values)
    upper = [slice(None)] * values.ndim
    lower = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    upper[axis], lower[axis], mid[axis] = slice(2, None), slice(None, -2), slice(1, -1)
    out[tuple(mid)] = (values[tuple(upper)] - values[tuple(lower)]) / (2.0 * spacing)
    first, second = [slice(None)] * values.ndim, [slice(None)] * values.ndim
    first[axis], second[axis] = slice(0, 1), slice(1, 2)
    out[tuple(first)] = (values[tuple(second)] - values[tuple(first)]) / spacing
    last, prev = [slice(None)] * values.ndim, [slice(None)] * values.ndim
    last[axis], prev[axis] = slice(-1, None), slice(-2, -1)
    out[tuple(last)] = (values[tuple(last)] - values[tuple(prev)]) / spacing
    return out


def horizontal_gradient(field: GridField) -> tuple[GridField, GridField]:
    """Eastward and northward components of the horizontal gradient."""
    spec, cos_phi = _prepare(field)
    df_dx = _diff(field.values, spec.dlam, axis=3) / (spec.a * cos_phi)
    df_dy = _diff(field.values, spec.dphi, axis=2) / spec.a
    unit = f"{field.units} m-1"
    return (field.with_values(df_dx, name=f"ddx_{field.name}", units=unit),
            field.with_values(df_dy, name=f"ddy_{field.name}", units=unit))


def vorticity(u: GridField, v: GridField) -> GridField:
    """Relative vorticity (1/(a cos phi)) (dv/dlam - d(u cos phi)/dphi)."""
    spec, cos_phi = _prepare(u, v)
    dv_dlam = _diff(v.values, spec.dlam, axis=3)
    du_cos_dphi = _diff(u.values * cos_phi, spec.dphi, axis=2)
    zeta = (dv_dlam - du_cos_dphi) / (spec.a * cos_phi)
    return u.with_values(zeta, name="vorticity", units="s-1")


def divergence(u: GridField, v: GridField) -> GridField:
    """Horizontal divergence (1/(a cos phi)) (du/dlam + d(v cos phi)/dphi)."""
    spec, cos_phi = _prepare(u, v)
    du_dlam = _diff(u.values, spec.dlam, axis=3)
    dv_cos_dphi = _diff(v.values * cos_phi, spec.dphi, axis=2)
    div = (du_dlam + dv_cos_dphi) / (spec.a * cos_phi)
    return u.with_values(div, name="divergence", units="s-1")


def advection(scalar: GridField, u: GridField, v: GridField) -> GridField:
    """Advection of a scalar by the horizontal wind, -(u ds/dx + v ds/dy)."""
    _prepare(scalar, u, v)
    ds_dx, ds_dy = horizontal_gradient(scalar)
    adv = -(u.values * ds_dx.values + v.values * ds_dy.values)
    return scalar.with_values(adv, name=f"adv_{scalar.name}", units=f"{scalar.units} s-1")


def frontogenesis(theta: GridField, u: GridField, v: GridField) -> GridField:
    """Petterssen two-dimensional frontogenesis function of theta.

    F = (1/|grad theta|) * (-tx*tx*ux - tx*ty*(vx + uy) - ty*ty*vy), with the
    subscripts denoting the spherical partials used throughout this module.
    Defined as 0 wherever |grad theta| falls below the gradient floor.
    """
    _prepare(theta, u, v)
    tx, ty = (g.values for g in horizontal_gradient(theta))
    ux, uy = (g.values for g in horizontal_gradient(u))
    vx, vy = (g.values for g in horizontal_gradient(v))
    mag = np.hypot(tx, ty)
    numer = -(tx * tx * ux) - tx * ty * (vx + uy) - (ty * ty * vy)
    with np.errstate(divide="ignore", invalid="ignore"):
        front = np.where(mag < FRONTOGENESIS_GRADIENT_FLOOR, 0.0, numer / mag)
    return theta.with_values(front, name="frontogenesis", units="K m-1 s-1")


def moisture_flux_divergence(q: GridField, u: GridField, v: GridField) -> GridField:
    """Divergence of the horizontal moisture flux, q*div(V) + V . grad(q)."""
    _prepare(q, u, v)
    div = divergence(u, v)
    qx, qy = horizontal_gradient(q)
    mfd = q.values * div.values + u.values * qx.values + v.values * qy.values
    return q.with_values(mfd, name="moisture_flux_divergence", units=f"{q.units} s-1")


def wind_speed(u: GridField, v: GridField) -> GridField:
    require_unmasked(u, v)
    require_same_grid(u, v)
    return u.with_values(np.hypot(u.values, v.values), name="wind_speed", units=u.units)
