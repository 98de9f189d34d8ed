"""Reference answers for shipped benchmark cases, computed off the main code path.

Nothing here imports the production kernels.  Moist quantities use the
WMO/Magnus saturation curve instead of Bolton's fit, the pseudoadiabat is
integrated as an ODE with RK4 instead of inverting a theta-e fit, and grid
quantities come from closed forms evaluated at analytic fields.  Constants
are redeclared locally on purpose.
"""

from __future__ import annotations

import math

_RD = 287.04
_CP = 1004.6
_KAPPA = _RD / _CP
_EPS = 0.622
_G = 9.80665
_RHO_W = 1000.0
_EARTH_RADIUS = 6.371e6


def es_magnus(t_k: float) -> float:
    """Saturation vapour pressure (hPa), WMO Magnus coefficients."""
    tc = t_k - 273.15
    return 6.112 * math.exp(17.62 * tc / (243.12 + tc))


def rs_magnus(p_hpa: float, t_k: float) -> float:
    e = es_magnus(t_k)
    return _EPS * e / (p_hpa - e)


def mixing_ratio(p_hpa: float, td_k: float) -> float:
    return rs_magnus(p_hpa, td_k)


def dewpoint_magnus(p_hpa: float, r: float) -> float:
    """Dewpoint (K) whose Magnus mixing ratio at p_hpa equals r."""
    e = p_hpa * r / (_EPS + r)
    x = math.log(e / 6.112)
    return 243.12 * x / (17.62 - x) + 273.15


def q_for_rh_magnus(p_hpa: float, t_k: float, rh_pct: float) -> float:
    """Specific humidity giving the requested Magnus relative humidity."""
    e = rh_pct / 100.0 * es_magnus(t_k)
    w = _EPS * e / (p_hpa - e)
    return w / (1.0 + w)


def virtual_temperature(t_k: float, r: float) -> float:
    return t_k * (1.0 + 0.608 * r)


def relative_humidity_pct(p_hpa: float, t_k: float, q: float) -> float:
    w = q / (1.0 - q)
    e = p_hpa * w / (_EPS + w)
    return 100.0 * e / es_magnus(t_k)


def lcl_by_bisection(p0: float, t0: float, td0: float) -> tuple[float, float]:
    """(p_lcl, t_lcl) found by walking the dry adiabat until saturation."""
    r0 = mixing_ratio(p0, td0)
    if rs_magnus(p0, t0) <= r0:
        return p0, t0

    def unsaturated(p: float) -> bool:
        t = t0 * (p / p0) ** _KAPPA
        return rs_magnus(p, t) > r0

    lo, hi = 10.0, p0          # lo saturated end, hi unsaturated end
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if unsaturated(mid):
            hi = mid
        else:
            lo = mid
    p_lcl = 0.5 * (lo + hi)
    return p_lcl, t0 * (p_lcl / p0) ** _KAPPA


def _pseudo_lapse(p: float, t: float) -> float:
    """dT/dp (K/hPa) along the pseudoadiabat, moisture heat capacity neglected."""
    r = rs_magnus(p, t)
    lv = 2.501e6 - 2370.0 * (t - 273.15)
    numer = (_RD * t + lv * r) / p
    denom = _CP + (lv * lv * r * _EPS) / (_RD * t * t)
    return numer / denom


def moist_descent(p_from: float, t_from: float, p_to: float, dp: float = 0.05) -> float:
    """RK4 march along the pseudoadiabat from (p_from, t_from) to p_to."""
    p, t = p_from, t_from
    step_sign = 1.0 if p_to > p_from else -1.0
    while (p_to - p) * step_sign > 1e-9:
        h = step_sign * min(dp, abs(p_to - p))
        k1 = _pseudo_lapse(p, t)
        k2 = _pseudo_lapse(p + h / 2.0, t + h * k1 / 2.0)
        k3 = _pseudo_lapse(p + h / 2.0, t + h * k2 / 2.0)
        k4 = _pseudo_lapse(p + h, t + h * k3)
        t += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        p += h
    return t


def theta_e_reference(p_hpa: float, t_k: float, td_k: float, p_top: float = 20.0) -> float:
    """Equivalent potential temperature by full pseudoadiabatic integration."""
    p_lcl, t_lcl = lcl_by_bisection(p_hpa, t_k, td_k)
    t_top = moist_descent(p_lcl, t_lcl, p_top)
    return t_top * (1000.0 / p_top) ** _KAPPA


def slab_cape_reference(excess_k: float, p_bottom: float, p_top: float) -> float:
    """CAPE of a constant virtual-temperature excess between two pressures."""
    return _RD * excess_k * math.log(p_bottom / p_top)


def precipitable_water_reference(r: float, p_bottom: float, p_top: float) -> float:
    """PW (mm) of a constant mixing ratio between two pressures (hPa)."""
    return r * (p_bottom - p_top) * 100.0 / (_RHO_W * _G) * 1000.0


def solid_body_vorticity(u0: float, lat_deg: float) -> float:
    """Relative vorticity of u = u0 cos(lat), v = 0."""
    return 2.0 * u0 * math.sin(math.radians(lat_deg)) / _EARTH_RADIUS


def zonal_wave_divergence(u0: float, lon_deg: float, lat_deg: float, wavenumber: float = 1.0) -> float:
    """Divergence of u = u0 sin(k lon), v = 0 at a point."""
    lam = math.radians(lon_deg)
    phi = math.radians(lat_deg)
    return u0 * wavenumber * math.cos(wavenumber * lam) / (_EARTH_RADIUS * math.cos(phi))


def zonal_advection(u0: float, slope_per_rad: float, lat_deg: float) -> float:
    """Advection -u0 * ds/dx of s = slope * lon(rad) by uniform u = u0."""
    return -u0 * slope_per_rad / (_EARTH_RADIUS * math.cos(math.radians(lat_deg)))


def wave_divergence_extremum(u0: float, wavenumber: float, lat_deg: float) -> float:
    """Peak divergence of u = u0 sin(k (lon - lon0)), v = 0 along a latitude row."""
    return u0 * wavenumber / (_EARTH_RADIUS * math.cos(math.radians(lat_deg)))


def meridional_gradient_magnitude(slope_per_rad: float) -> float:
    """|grad s| of s = slope * lat(rad)."""
    return abs(slope_per_rad) / _EARTH_RADIUS


def deformation_frontogenesis(rate: float, theta_slope_per_rad: float) -> float:
    """F of theta(lat) under u = k x, v = -k y (pure deformation): k |grad theta|."""
    return rate * abs(theta_slope_per_rad) / _EARTH_RADIUS


def isotherm_height_reference(t0: float, lapse: float, target: float) -> float:
    return (t0 - target) / lapse


def bulk_shear_reference(u_lo: float, v_lo: float, u_hi: float, v_hi: float) -> float:
    return math.hypot(u_hi - u_lo, v_hi - v_lo)
