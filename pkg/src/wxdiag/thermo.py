"""Sounding thermodynamics: vapour quantities, theta-e, PW, CAPE, isotherm height.

Saturation vapour pressure, the lifting-condensation temperature and the
equivalent potential temperature follow Bolton (1980, MWR 108) eqs 10, 15
and 43.  CAPE integrates parcel buoyancy in ln(p) with the virtual
temperature correction, lifting a surface-based parcel dry-adiabatically to
its LCL and pseudoadiabatically above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import EPSILON, G0, KAPPA, P0, RD, RHO_WATER, T0C

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class SoundingError(ValueError):
    """Raised for inconsistent or insufficient vertical profiles."""


# ---------------------------------------------------------------------------
# moist-air state functions (scalars or numpy arrays, hPa / K / kg kg-1)

def saturation_vapor_pressure(t):
    """Saturation vapour pressure over water, hPa (Bolton eq 10).

    Parameters
    ----------
    t : float or ndarray
        Air temperature (K).
    """
    tc = np.asarray(t, dtype=np.float64) - T0C
    return 6.112 * np.exp(17.67 * tc / (tc + 243.5))


def mixing_ratio_from_dewpoint(p, td):
    """Water-vapour mixing ratio (kg kg-1) from pressure (hPa) and dewpoint (K)."""
    e = saturation_vapor_pressure(td)
    p = np.asarray(p, dtype=np.float64)
    if np.any(e >= p):
        raise SoundingError("vapour pressure exceeds total pressure")
    return EPSILON * e / (p - e)


def saturation_mixing_ratio(p, t):
    return mixing_ratio_from_dewpoint(p, t)


def mixing_ratio_from_specific_humidity(q):
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0) or np.any(q >= 1):
        raise SoundingError("specific humidity outside [0, 1)")
    return q / (1.0 - q)


def virtual_temperature(t, r):
    """Virtual temperature from temperature (K) and mixing ratio (kg kg-1)."""
    t = np.asarray(t, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    return t * (1.0 + r / EPSILON) / (1.0 + r)


def potential_temperature(p, t):
    """theta = T (1000 / p) ** (Rd / cp)."""
    return np.asarray(t, dtype=np.float64) * (P0 / np.asarray(p, dtype=np.float64)) ** KAPPA


def lcl_temperature(t, td):
    """Temperature at the lifting condensation level, K (Bolton eq 15)."""
    t = np.asarray(t, dtype=np.float64)
    td = np.asarray(td, dtype=np.float64)
    if np.any(td > t + 1e-9):
        raise SoundingError("dewpoint exceeds temperature")
    return 1.0 / (1.0 / (td - 56.0) + np.log(t / td) / 800.0) + 56.0


def theta_e(p, t, td):
    """Pseudoadiabatic equivalent potential temperature, K (Bolton eq 43).

    Parameters
    ----------
    p : float or ndarray
        Pressure (hPa).
    t, td : float or ndarray
        Temperature and dewpoint (K); requires td <= t.
    """
    r = mixing_ratio_from_dewpoint(p, td)
    t_lcl = lcl_temperature(t, td)
    p = np.asarray(p, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    dry = t * (P0 / p) ** (0.2854 * (1.0 - 0.28 * r))
    return dry * np.exp(r * (1.0 + 0.81 * r) * (3376.0 / t_lcl - 2.54))


def dewpoint_from_mixing_ratio(p, r):
    """Invert Bolton eq 10 for the dewpoint (K) of a given mixing ratio."""
    r = np.asarray(r, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    e = p * r / (EPSILON + r)
    ln_term = np.log(e / 6.112)
    return 243.5 * ln_term / (17.67 - ln_term) + T0C


def relative_humidity_from_q(p, t, q):
    """Relative humidity in percent from pressure (hPa), T (K) and q (kg kg-1).

    Unclamped: slightly supersaturated inputs report > 100.
    """
    w = mixing_ratio_from_specific_humidity(q)
    e = np.asarray(p, dtype=np.float64) * w / (EPSILON + w)
    return 100.0 * e / saturation_vapor_pressure(t)


# ---------------------------------------------------------------------------
# vertical profiles

@dataclass(frozen=True)
class Sounding:
    """A single-station vertical profile on pressure levels.

    Parameters
    ----------
    p : ndarray
        Pressure levels, hPa, strictly decreasing, at least two.
    t : ndarray
        Temperature (K) at each level.
    td : ndarray, optional
        Dewpoint (K); td <= t where present.
    q : ndarray, optional
        Specific humidity (kg kg-1); used when td is absent.
    z : ndarray, optional
        Geometric height (m), strictly increasing; required for isotherm work.
    """

    p: np.ndarray
    t: np.ndarray
    td: np.ndarray | None = None
    q: np.ndarray | None = None
    z: np.ndarray | None = None

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=np.float64).reshape(-1)
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        if p.size < 2:
            raise SoundingError("a sounding needs at least two levels")
        if np.any(np.diff(p) >= 0):
            raise SoundingError("pressure levels must strictly decrease")
        if t.shape != p.shape:
            raise SoundingError("temperature length differs from pressure length")
        arrays = {"p": p, "t": t}
        for key in ("td", "q", "z"):
            value = getattr(self, key)
            if value is not None:
                value = np.asarray(value, dtype=np.float64).reshape(-1)
                if value.shape != p.shape:
                    raise SoundingError(f"{key} length differs from pressure length")
            arrays[key] = value
        if arrays["td"] is not None and np.any(arrays["td"] > t + 1e-9):
            raise SoundingError("dewpoint exceeds temperature")
        if arrays["z"] is not None and np.any(np.diff(arrays["z"]) <= 0):
            raise SoundingError("heights must strictly increase")
        for key, value in arrays.items():
            if value is not None:
                value = value.copy()
                value.setflags(write=False)
            object.__setattr__(self, key, value)

    def mixing_ratio(self) -> np.ndarray:
        if self.td is not None:
            return mixing_ratio_from_dewpoint(self.p, self.td)
        if self.q is not None:
            return mixing_ratio_from_specific_humidity(self.q)
        raise SoundingError("sounding carries neither dewpoint nor specific humidity")

    def as_mapping(self) -> dict:
        out: dict = {"p": self.p.tolist(), "t": self.t.tolist()}
        for key in ("td", "q", "z"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value.tolist()
        return out

    @classmethod
    def from_mapping(cls, data: dict) -> "Sounding":
        try:
            return cls(p=np.asarray(data["p"], dtype=np.float64),
                       t=np.asarray(data["t"], dtype=np.float64),
                       td=np.asarray(data["td"], dtype=np.float64) if "td" in data else None,
                       q=np.asarray(data["q"], dtype=np.float64) if "q" in data else None,
                       z=np.asarray(data["z"], dtype=np.float64) if "z" in data else None)
        except KeyError as exc:
            raise SoundingError(f"sounding mapping missing key {exc}") from exc


def precipitable_water_mm(sounding: Sounding, bottom: float | None = None,
                          top: float | None = None) -> float:
    """Column precipitable water, mm, by trapezoidal integration of r dp.

    PW = -(1 / (rho_l g)) * integral of r dp from `bottom` to `top`, where
    `bottom` defaults to the highest pressure of the profile and `top` to the
    lowest.  Levels inside [top, bottom] (inclusive) take part; at least two
    are required.
    """
    p = sounding.p
    bottom = float(bottom) if bottom is not None else float(p[0])
    top = float(top) if top is not None else float(p[-1])
    if top >= bottom:
        raise SoundingError(f"integration bounds inverted: top {top} >= bottom {bottom}")
    keep = (p <= bottom) & (p >= top)
    if keep.sum() < 2:
        raise SoundingError("fewer than two levels inside the integration bounds")
    r = sounding.mixing_ratio()[keep]
    p_pa = p[keep] * 100.0
    integral = -float(_trapezoid(r, p_pa))   # p decreases, so the raw integral is negative
    return integral / (RHO_WATER * G0) * 1000.0


def isotherm_height_m(sounding: Sounding, target: float = T0C) -> float:
    """Height (m) of the lowest crossing of the target temperature.

    Linear interpolation of T against z between bracketing levels; a level
    sitting exactly on the target returns its own height.
    """
    if sounding.z is None:
        raise SoundingError("isotherm height needs a height coordinate")
    t, z = sounding.t, sounding.z
    diff = t - target
    for i in range(t.size):
        if diff[i] == 0.0:
            return float(z[i])
        if i + 1 < t.size and diff[i] * diff[i + 1] < 0.0:
            frac = diff[i] / (t[i] - t[i + 1])
            return float(z[i] + frac * (z[i + 1] - z[i]))
    raise SoundingError(f"profile never crosses {target} K")


def parcel_profile(sounding: Sounding) -> np.ndarray:
    """Temperature (K) of a surface-based parcel lifted to every profile level.

    Dry adiabat up to the LCL, then pseudoadiabatic ascent found by inverting
    Bolton theta-e conservation with bisection.
    """
    p = sounding.p
    t0 = float(sounding.t[0])
    if sounding.td is not None:
        td0 = float(sounding.td[0])
    elif sounding.q is not None:
        td0 = float(dewpoint_from_mixing_ratio(p[0], mixing_ratio_from_specific_humidity(sounding.q[0])))
    else:
        raise SoundingError("parcel ascent needs surface moisture (td or q)")

    t_lcl = float(lcl_temperature(t0, td0))
    p_lcl = float(p[0] * (t_lcl / t0) ** (1.0 / KAPPA))
    theta_e0 = float(theta_e(p[0], t0, td0))

    out = np.empty_like(p)
    for i, pi in enumerate(p):
        if pi >= p_lcl:
            out[i] = t0 * (pi / p[0]) ** KAPPA
        else:
            out[i] = _moist_parcel_temperature(pi, theta_e0)
    return out


def _moist_parcel_temperature(p: float, theta_e_target: float) -> float:
    """Solve theta_e(p, T, T) = target for T with bisection (monotone in T)."""
    lo, hi = 100.0, 400.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if float(theta_e(p, mid, mid)) < theta_e_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cape_jkg(sounding: Sounding) -> float:
    """Surface-based CAPE, J kg-1.

    CAPE = Rd * sum of max(0, Tv_parcel - Tv_env) d(ln p) over the positive
    buoyancy layers, with linear interpolation of the buoyancy excess in
    ln(p) at sign changes.  Returns 0 when the profile never turns positive.
    """
    p = sounding.p
    if p[0] - p[-1] < 300.0:
        raise SoundingError("CAPE needs a sounding spanning at least 300 hPa")
    t_parcel = parcel_profile(sounding)

    t0 = float(sounding.t[0])
    if sounding.td is not None:
        r0 = float(mixing_ratio_from_dewpoint(p[0], sounding.td[0]))
    else:
        r0 = float(mixing_ratio_from_specific_humidity(sounding.q[0]))
    t_lcl = float(lcl_temperature(t0, dewpoint_from_mixing_ratio(p[0], r0)))
    p_lcl = float(p[0] * (t_lcl / t0) ** (1.0 / KAPPA))
    r_parcel = np.where(p >= p_lcl, r0, saturation_mixing_ratio(p, t_parcel))
    tv_parcel = virtual_temperature(t_parcel, r_parcel)

    if sounding.td is not None or sounding.q is not None:
        r_env = sounding.mixing_ratio()
    else:
        r_env = np.zeros_like(p)
    tv_env = virtual_temperature(sounding.t, r_env)

    excess = tv_parcel - tv_env
    lnp = np.log(p)
    area = 0.0
    for k in range(p.size - 1):
        b0, b1 = excess[k], excess[k + 1]
        dx = lnp[k] - lnp[k + 1]          # positive (p decreases upward)
        if b0 <= 0.0 and b1 <= 0.0:
            continue
        if b0 >= 0.0 and b1 >= 0.0:
            area += 0.5 * (b0 + b1) * dx
        elif b0 < 0.0:                     # crossing into positive buoyancy
            frac = b1 / (b1 - b0)
            area += 0.5 * b1 * frac * dx
        else:                              # leaving positive buoyancy
            frac = b0 / (b0 - b1)
            area += 0.5 * b0 * frac * dx
    return RD * area
