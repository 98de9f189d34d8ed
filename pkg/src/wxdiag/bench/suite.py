"""Builders for the shipped benchmark suites (index / figure / end-to-end).

Every index ground truth is a closed form from `oracles`, evaluated at a
field constructed so the extremum, mean or point value in question is known
analytically.  The builder re-runs each written case through the production
kernels and refuses to ship one that would not clear the acceptance gate:
such a case could never separate a healthy tree from a broken one.

Layout under the target root:
    index/   case JSONs + fixtures/<case>/ stores
    figure/  case JSONs + fixtures/figfields/ shared store
    e2e/     case JSONs (their stores are synthesized at run time)
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..grid import GridField, parse_timestamp
from ..harness import (GATE_EPS, FIGURE_CASE_SCHEMA, INDEX_CASE_SCHEMA,
                       SCENARIO_CASE_SCHEMA, load_case, relative_error)
from ..indices import compute_index, registry
from ..store import write_store
from ..thermo import Sounding
from . import oracles

T0 = "2014-05-08T12:00Z"
T_MINUS_24H = "2014-05-07T12:00Z"

# geometry fixtures assume the same sphere as the kernels and the oracles
SPHERE_RADIUS_M = 6.371e6

LATS = np.linspace(40.0, 50.0, 11)
LONS = np.linspace(100.0, 110.0, 11)
# keeps reductions away from the one-sided boundary stencils
INTERIOR = {"lat_min": 41.0, "lat_max": 49.0, "lon_min": 101.0, "lon_max": 109.0}
PHI_EDGE = 49.0                    # interior latitude where 1/cos peaks
WAVE_K = 3.0
LON0 = 105.0


def _axes2d():
    yy = LATS[:, None] - 45.0
    xx = LONS[None, :] - 105.0
    return yy, xx


def _bump():
    # separable sine hill: exactly 1.0 at the (45, 105) node, 0 on the rim
    y = np.sin(np.pi * (LATS - LATS[0]) / (LATS[-1] - LATS[0]))
    x = np.sin(np.pi * (LONS - LONS[0]) / (LONS[-1] - LONS[0]))
    return y[:, None] * x[None, :]


def _mkfield(name, units, planes, levels=(500.0,), times=(T0,)):
    """Stack one 2-D plane per (time, level) pair into a GridField."""
    stamps = tuple(parse_timestamp(t) for t in times)
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim == 2:
        planes = planes[None, None]
    elif planes.ndim == 3:                          # one plane per level
        planes = np.broadcast_to(planes[None], (len(stamps),) + planes.shape)
    return GridField(name=name, units=units, times=stamps,
                     levels=tuple(float(l) for l in levels),
                     lats=LATS, lons=LONS, values=planes.copy())


def _linear(base, per_lat=0.0, per_lon=0.0):
    yy, xx = _axes2d()
    return base + per_lat * yy + per_lon * xx


def _lon_rad_ramp(base, slope_per_rad, lon0=LON0):
    lam = np.deg2rad(LONS) - math.radians(lon0)
    return base + slope_per_rad * np.broadcast_to(lam[None, :], (11, 11))


def _lat_rad_ramp(base, slope_per_rad, lat0=45.0):
    phi = np.deg2rad(LATS) - math.radians(lat0)
    return base + slope_per_rad * np.broadcast_to(phi[:, None], (11, 11))


def _zonal_wave(u0):
    lam = np.deg2rad(LONS) - math.radians(LON0)
    plane = u0 * np.sin(WAVE_K * lam)
    return np.broadcast_to(plane[None, :], (11, 11)).copy()


# ---------------------------------------------------------------------------
# index suite

def _constant_r_sounding(r=0.01, p=(1000.0, 975.0, 950.0, 925.0, 900.0), t=292.0):
    p = np.asarray(p, dtype=np.float64)
    td = np.array([oracles.dewpoint_magnus(pi, r) for pi in p])
    return Sounding(p=p, t=np.full(p.size, float(t)), td=td)


def _slab_cape_sounding(excess=2.0, p_bottom=500.0, p_top=300.0):
    """Environment tuned so a surface parcel holds `excess` K of virtual
    excess inside the slab and a 5 K deficit elsewhere."""
    p = np.array([1000.0, 950, 900, 850, 800, 750, 700, 650, 600, 550, 501,
                  500, 450, 400, 350, 300, 299, 250, 200])
    kappa = 287.04 / 1004.6
    t_parcel = 300.0 * (p / 1000.0) ** kappa
    r0 = oracles.mixing_ratio(1000.0, 200.0)
    tv_parcel = np.array([oracles.virtual_temperature(t, r0) for t in t_parcel])
    offset = np.where((p <= p_bottom) & (p >= p_top), -excess, 5.0)
    t_env = tv_parcel + offset
    t_env[0] = 300.0
    td = np.full(p.size, 150.0)
    td[0] = 200.0
    return Sounding(p=p, t=t_env, td=td)


def _isotherm_sounding(t0=288.15, lapse=0.0065):
    p = np.array([1000.0, 925.0, 850.0, 700.0, 500.0])
    z = np.array([0.0, 650.0, 1460.0, 3010.0, 5570.0])
    return Sounding(p=p, t=t0 - lapse * z, z=z)


def _theta_e_diff_sounding(r_850=0.010, r_500=1e-4):
    p = np.array([1000.0, 925.0, 850.0, 700.0, 600.0, 500.0])
    t = np.array([302.0, 298.0, 296.0, 284.0, 270.0, 252.0])
    td = t - 10.0
    td[2] = oracles.dewpoint_magnus(850.0, r_850)
    td[5] = oracles.dewpoint_magnus(500.0, r_500)
    return Sounding(p=p, t=t, td=td)


def _index_cases():
    """(case id, index id, question, fixture builder) for all 30 indices.

    Each builder returns a dict with `fields` and/or `soundings`, kernel
    `params`, the oracle `gt`, and its `units`.
    """
    bump = _bump()

    def wave_extremum(u0):
        return oracles.wave_divergence_extremum(u0, WAVE_K, PHI_EDGE)

    cases = []

    def case(case_id, index_id, question, build):
        cases.append((case_id, index_id, question, build))

    # --- Easy: plain reductions and point reads -------------------------
    case("idx-01-cold-high", "Cold High Pressure Intensity",
         "Peak sea-level pressure of the cold anticyclone over the analysis box.",
         lambda: {"fields": {"msl": _mkfield("msl", "hPa", 1028.0 + 12.0 * bump,
                                             levels=(0.0,))},
                  "params": {}, "gt": 1040.0, "units": "hPa"})
    case("idx-02-mean-temperature", "Temperature",
         "Area-average 850-hPa temperature across the domain.",
         lambda: {"fields": {"t": _mkfield("t", "K", _linear(250.0, per_lat=0.8),
                                           levels=(850.0,))},
                  "params": {}, "gt": 250.0, "units": "K"})
    case("idx-03-mean-humidity", "Specific Humidity",
         "Mean 925-hPa specific humidity over the box.",
         lambda: {"fields": {"q": _mkfield("q", "kg kg-1",
                                           _linear(0.008, per_lon=2e-4),
                                           levels=(925.0,))},
                  "params": {}, "gt": 0.008, "units": "kg kg-1"})
    case("idx-04-pwat", "Precipitable Water (PWAT)",
         "Column precipitable water of the station profile.",
         lambda: {"soundings": {"case": _constant_r_sounding()},
                  "params": {},
                  "gt": oracles.precipitable_water_reference(0.01, 1000.0, 900.0),
                  "units": "mm"})
    case("idx-05-z500-mean", "500hPa Geopotential Height",
         "Mean 500-hPa geopotential height over the sector.",
         lambda: {"fields": {"z": _mkfield("z", "gpm", _linear(5640.0, per_lat=12.0))},
                  "params": {}, "gt": 5640.0, "units": "gpm"})
    case("idx-06-surface-low", "Surface Low-Pressure",
         "Central pressure of the surface cyclone.",
         lambda: {"fields": {"msl": _mkfield("msl", "hPa", 1010.0 - 12.0 * bump,
                                             levels=(0.0,))},
                  "params": {}, "gt": 998.0, "units": "hPa"})
    case("idx-07-thunderstorm-high", "Thunderstorm High Central Intensity",
         "Central pressure of the mesoscale thunderstorm high.",
         lambda: {"fields": {"msl": _mkfield("msl", "hPa", 1012.0 + 6.0 * bump,
                                             levels=(0.0,))},
                  "params": {}, "gt": 1018.0, "units": "hPa"})
    case("idx-08-cold-pool", "Cold Pool Central Temperature",
         "Lowest 850-hPa temperature inside the cold pool.",
         lambda: {"fields": {"t": _mkfield("t", "K", 260.0 - 18.0 * bump,
                                           levels=(850.0,))},
                  "params": {}, "gt": 242.0, "units": "K"})
    case("idx-09-surface-wind", "Surface Wind Speed",
         "Strongest surface wind speed in the gust footprint.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1", 3.0 + 4.0 * bump, levels=(0.0,)),
                             "v": _mkfield("v", "m s-1", 4.0 + 3.0 * bump, levels=(0.0,))},
                  "params": {}, "gt": math.hypot(7.0, 7.0), "units": "m s-1"})
    case("idx-10-t-change-24h", "24-h Temp Change at Different Levels",
         "24-hour 850-hPa temperature change at the station point.",
         lambda: {"fields": {"t": _mkfield("t", "K",
                                           np.stack([[280.0 + 2.0 * bump],
                                                     [271.0 + 1.0 * bump]]),
                                           levels=(850.0,), times=(T_MINUS_24H, T0))},
                  "params": {"times": [T_MINUS_24H, T0], "point": [45.0, 105.0],
                             "level": 850.0},
                  "gt": -10.0, "units": "K"})
    case("idx-11-polar-vortex", "Polar Vortex Center Geopotential Height",
         "Minimum 500-hPa height at the vortex core.",
         lambda: {"fields": {"z": _mkfield("z", "gpm", 5200.0 - 180.0 * bump)},
                  "params": {}, "gt": 5020.0, "units": "gpm"})

    # --- Medium: one-formula kernels ------------------------------------
    case("idx-12-cold-advection", "Surface Negative Temp Advection",
         "Strongest low-level cold advection in the frontal zone.",
         lambda: {"fields": {"t": _mkfield("t", "K", _lon_rad_ramp(280.0, 25.0),
                                           levels=(1000.0,)),
                             "u": _mkfield("u", "m s-1", np.full((11, 11), 12.0),
                                           levels=(1000.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(1000.0,))},
                  "params": {"region": INTERIOR},
                  "gt": oracles.zonal_advection(12.0, 25.0, PHI_EDGE),
                  "units": "K s-1"})
    case("idx-13-positive-vorticity", "Positive Vorticity",
         "Peak 500-hPa relative vorticity of the rotating flow.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1",
                                           10.0 * np.cos(np.deg2rad(LATS))[:, None]
                                           * np.ones((1, 11))),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)))},
                  "params": {"region": INTERIOR},
                  "gt": oracles.solid_body_vorticity(10.0, PHI_EDGE),
                  "units": "s-1"})
    case("idx-14-jet-intensity", "Jet Intensity",
         "Maximum 200-hPa jet-core wind speed.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1", 45.0 + 20.0 * bump,
                                           levels=(200.0,)),
                             "v": _mkfield("v", "m s-1", 10.0 * bump, levels=(200.0,))},
                  "params": {}, "gt": math.hypot(65.0, 10.0), "units": "m s-1"})
    case("idx-15-t-gradient", "Horizontal Temperature Gradient",
         "Largest horizontal temperature gradient across the baroclinic zone.",
         lambda: {"fields": {"t": _mkfield("t", "K", _lat_rad_ramp(270.0, 30.0),
                                           levels=(850.0,))},
                  "params": {"region": INTERIOR},
                  "gt": oracles.meridional_gradient_magnitude(30.0),
                  "units": "K m-1"})
    case("idx-16-max-omega", "Maximum Vertical Velocity",
         "Strongest 500-hPa updraft (most negative omega).",
         lambda: {"fields": {"w": _mkfield("w", "Pa s-1", 0.3 - 2.0 * bump)},
                  "params": {}, "gt": -1.7, "units": "Pa s-1"})
    case("idx-17-low-level-convergence", "Low-Level Divergence Extrema",
         "Strongest 925-hPa convergence in the inflow region.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1", -_zonal_wave(15.0),
                                           levels=(925.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(925.0,))},
                  "params": {"region": INTERIOR},
                  "gt": -wave_extremum(15.0), "units": "s-1"})
    case("idx-18-high-level-divergence", "High-Level Convergence Extrema",
         "Peak 200-hPa divergence above the convective region.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1", _zonal_wave(15.0),
                                           levels=(200.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(200.0,))},
                  "params": {"region": INTERIOR},
                  "gt": wave_extremum(15.0), "units": "s-1"})
    case("idx-19-warm-advection", "Warm Advection Center Intensity",
         "Strongest 850-hPa warm advection ahead of the front.",
         lambda: {"fields": {"t": _mkfield("t", "K", _lon_rad_ramp(285.0, 20.0),
                                           levels=(850.0,)),
                             "u": _mkfield("u", "m s-1", np.full((11, 11), -10.0),
                                           levels=(850.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(850.0,))},
                  "params": {"region": INTERIOR},
                  "gt": oracles.zonal_advection(-10.0, 20.0, PHI_EDGE),
                  "units": "K s-1"})

    def rh_fixture():
        levels = (925.0, 850.0, 700.0)
        rhs = (80.0, 70.0, 60.0)
        t_planes = np.full((3, 11, 11), 285.0)
        q_planes = np.stack([np.full((11, 11), oracles.q_for_rh_magnus(p, 285.0, rh))
                             for p, rh in zip(levels, rhs)])
        return {"fields": {"t": _mkfield("t", "K", t_planes, levels=levels),
                           "q": _mkfield("q", "kg kg-1", q_planes, levels=levels)},
                "params": {"layer": [925.0, 700.0]},
                "gt": float(np.mean(rhs)), "units": "%"}

    case("idx-20-layer-rh", "Average Relative Humidity",
         "Mean relative humidity of the 925-700 hPa layer.", rh_fixture)
    case("idx-21-pressure-tendency", "Surface Cyclone Pressure Change Rate",
         "Deepening rate of the surface cyclone over 24 hours.",
         lambda: {"fields": {"msl": _mkfield("msl", "hPa",
                                             np.stack([[1002.0 - 6.0 * bump],
                                                       [990.0 - 10.0 * bump]]),
                                             levels=(0.0,), times=(T_MINUS_24H, T0))},
                  "params": {"times": [T_MINUS_24H, T0], "point": [45.0, 105.0]},
                  "gt": -16.0 / 24.0, "units": "hPa h-1"})
    case("idx-22-theta-e-diff", "Equiv. Potential Temp Diff (850-500hPa)",
         "Equivalent potential temperature drop from 850 to 500 hPa.",
         lambda: {"soundings": {"case": _theta_e_diff_sounding()},
                  "params": {"levels_pair": [850.0, 500.0]},
                  "gt": (oracles.theta_e_reference(850.0, 296.0,
                                                   oracles.dewpoint_magnus(850.0, 0.010))
                         - oracles.theta_e_reference(500.0, 252.0,
                                                     oracles.dewpoint_magnus(500.0, 1e-4))),
                  "units": "K"})
    case("idx-23-isotherm-height", "0°C Isotherm Height",
         "Height of the freezing level in the station profile.",
         lambda: {"soundings": {"case": _isotherm_sounding()},
                  "params": {},
                  "gt": oracles.isotherm_height_reference(288.15, 0.0065, 273.15),
                  "units": "m"})
    case("idx-24-temp-sa", "Temp Standardized Anomaly (SA)",
         "Standardized 850-hPa temperature anomaly at the station point.",
         lambda: {"fields": {"t": _mkfield("t", "K", 250.0 + 16.0 * bump,
                                           levels=(850.0,))},
                  "params": {"point": [45.0, 105.0], "mu": 259.5, "sigma": 2.5},
                  "gt": (266.0 - 259.5) / 2.5, "units": "1"})
    case("idx-25-wvfc", "Water Vapor Flux Convergence Intensity",
         "Peak 925-hPa water-vapor flux convergence feeding the rain area.",
         lambda: {"fields": {"q": _mkfield("q", "kg kg-1", np.full((11, 11), 0.012),
                                           levels=(925.0,)),
                             "u": _mkfield("u", "m s-1", -_zonal_wave(20.0),
                                           levels=(925.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(925.0,))},
                  "params": {"region": INTERIOR},
                  "gt": 0.012 * wave_extremum(20.0), "units": "kg kg-1 s-1"})

    # --- Hard: multi-step composites ------------------------------------
    def frontogenesis_fixture():
        rate, slope = 5e-5, 60.0
        theta = _lat_rad_ramp(300.0, slope)
        phi = np.deg2rad(LATS) - math.radians(45.0)
        v = -rate * SPHERE_RADIUS_M * np.broadcast_to(phi[:, None], (11, 11))
        return {"fields": {"theta": _mkfield("theta", "K", theta, levels=(850.0,)),
                           "u": _mkfield("u", "m s-1", np.zeros((11, 11)),
                                         levels=(850.0,)),
                           "v": _mkfield("v", "m s-1", v, levels=(850.0,))},
                "params": {"region": INTERIOR},
                "gt": oracles.deformation_frontogenesis(rate, slope),
                "units": "K m-1 s-1"}

    case("idx-26-frontogenesis", "Frontogenesis Function Center Value",
         "Frontogenesis at the center of the deformation zone.",
         frontogenesis_fixture)
    case("idx-27-mfd", "Moisture Flux Divergence",
         "Strongest 925-hPa moisture flux convergence (most negative divergence).",
         lambda: {"fields": {"q": _mkfield("q", "kg kg-1", np.full((11, 11), 0.010),
                                           levels=(925.0,)),
                             "u": _mkfield("u", "m s-1", -_zonal_wave(18.0),
                                           levels=(925.0,)),
                             "v": _mkfield("v", "m s-1", np.zeros((11, 11)),
                                           levels=(925.0,))},
                  "params": {"region": INTERIOR},
                  "gt": -0.010 * wave_extremum(18.0), "units": "kg kg-1 s-1"})
    case("idx-28-cape", "CAPE",
         "Convective available potential energy of the afternoon profile.",
         lambda: {"soundings": {"case": _slab_cape_sounding()},
                  "params": {},
                  "gt": oracles.slab_cape_reference(2.0, 500.0, 300.0),
                  "units": "J kg-1"})
    case("idx-29-bulk-shear", "Vertical Wind Shear",
         "Bulk wind shear between 850 and 200 hPa over the station.",
         lambda: {"fields": {"u": _mkfield("u", "m s-1",
                                           np.stack([np.full((11, 11), 8.0),
                                                     np.full((11, 11), 38.0)]),
                                           levels=(850.0, 200.0)),
                             "v": _mkfield("v", "m s-1",
                                           np.stack([np.full((11, 11), 2.0),
                                                     np.full((11, 11), -14.0)]),
                                           levels=(850.0, 200.0))},
                  "params": {"levels_pair": [850.0, 200.0], "point": [45.0, 105.0]},
                  "gt": oracles.bulk_shear_reference(8.0, 2.0, 38.0, -14.0),
                  "units": "m s-1"})
    case("idx-30-p-change-diff", "24-h Pressure Change Difference",
         "24-hour pressure-change contrast between the two reference points.",
         lambda: {"fields": {"msl": _mkfield("msl", "hPa",
                                             np.stack([[_linear(1006.0, per_lat=-1.0,
                                                                per_lon=0.5)],
                                                       [_linear(998.0, per_lat=1.0,
                                                                per_lon=-0.5)]]),
                                             levels=(0.0,), times=(T_MINUS_24H, T0))},
                  "params": {"times": [T_MINUS_24H, T0],
                             "points": [[43.0, 103.0], [47.0, 107.0]]},
                  "gt": -4.0, "units": "hPa"})

    return cases


def build_index_suite(root) -> list[Path]:
    root = Path(root) / "index"
    root.mkdir(parents=True, exist_ok=True)
    reg = registry()
    written = []
    for case_id, index_id, question, build in _index_cases():
        spec = reg[index_id]
        payload = build()
        fixture_rel = f"fixtures/{case_id}"
        store = write_store(root / fixture_rel, fields=payload.get("fields"),
                            soundings=payload.get("soundings"),
                            meta={"case_id": case_id})
        doc = {
            "schema": INDEX_CASE_SCHEMA,
            "case_id": case_id,
            "question": question,
            "index_id": index_id,
            "tier": spec.tier,
            "inputs": {"fixture": fixture_rel, "params": payload["params"],
                       "sounding": "case"},
            "gt": {"value": payload["gt"], "units": payload["units"]},
        }
        _assert_gate(store, spec, payload, case_id)
        path = root / f"{case_id}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", "utf-8")
        written.append(path)
    return written


def _assert_gate(store, spec, payload, case_id):
    """A shipped case must clear the gate under the production kernels."""
    inputs = {}
    for var in spec.required_vars:
        inputs[var] = (store.fetch_sounding("case") if var == "sounding"
                       else store.fetch_field(var))
    result = compute_index(spec.index_id, inputs, dict(payload["params"]))
    rel = relative_error(payload["gt"], result.value)
    if rel.eps >= GATE_EPS:
        raise RuntimeError(f"{case_id}: production value {result.value} misses "
                           f"oracle {payload['gt']} (eps={rel.eps:.3g})")


# ---------------------------------------------------------------------------
# figure suite

def _figure_fixture_fields():
    bump = _bump()
    yy, _ = _axes2d()
    ygrad = (LATS[:, None] - 40.0) / 10.0 * np.ones((1, 11))
    upper = (925.0, 850.0, 200.0)
    scale = np.array([(1000.0 / l) ** 0.6 for l in upper])[:, None, None]
    u3 = (4.0 + 9.0 * bump + 3.0 * ygrad)[None] * scale
    v3 = (-2.0 + 5.0 * bump)[None] * scale
    t3 = np.stack([288.0 - 0.05 * (1000.0 - l) + 7.0 * bump - 4.0 * ygrad
                   for l in upper])
    q3 = np.stack([np.full((11, 11), q) for q in (0.013, 0.009, 0.0004)])
    return {
        "z": _mkfield("z", "gpm", 5620.0 - 90.0 * bump + 18.0 * yy),
        "z_sa": _mkfield("z_sa", "1", -2.2 * bump),
        "msl": _mkfield("msl", "hPa", 1014.0 - 12.0 * bump, levels=(0.0,)),
        "u": _mkfield("u", "m s-1", u3, levels=upper),
        "v": _mkfield("v", "m s-1", v3, levels=upper),
        "t": _mkfield("t", "K", t3, levels=upper),
        "td": _mkfield("td", "K", t3 - (3.0 + 2.0 * ygrad)[None], levels=upper),
        "q": _mkfield("q", "kg kg-1", q3, levels=upper),
        "t2m_sa": _mkfield("t2m_sa", "1", -1.5 - 1.8 * bump, levels=(0.0,)),
        "u10": _mkfield("u10", "m s-1", 3.0 + 4.0 * bump, levels=(0.0,)),
        "v10": _mkfield("v10", "m s-1", 2.0 + 2.0 * bump, levels=(0.0,)),
    }


def _figure_cases():
    def qa(question, answer, **probe):
        return {"question": question, "answer": answer, "probe": probe}

    return [
        ("fig-01-synoptic", "synoptic_z500_msl_barbs",
         "Overview chart: 500-hPa height shading, sea-level pressure contours, 850-hPa wind.",
         [qa("Does the chart shade 500-hPa geopotential height?", "yes",
             kind="has_ref", ref="z@500"),
          qa("Are the pressure contours drawn every 4 hPa?", "yes",
             kind="contour_interval", ref="msl@0", value=4.0),
          qa("Does the chart include wind barbs?", "yes",
             kind="has_layer_kind", value="barbs"),
          qa("Does the chart show 700-hPa humidity?", "no",
             kind="has_ref", ref="q@700"),
          qa("Did the renderer produce a vector document?", "yes",
             kind="svg_contains", text="<svg")]),
        ("fig-02-theta-e", "theta_e_850_z500",
         "850-hPa equivalent potential temperature with the 500-hPa height field.",
         [qa("Is 850-hPa equivalent potential temperature shaded?", "yes",
             kind="has_ref", ref="theta_e@850"),
          qa("Are height contours drawn every 40 gpm?", "yes",
             kind="contour_interval", ref="z@500", value=40.0),
          qa("Does the chart include wind barbs?", "no",
             kind="has_layer_kind", value="barbs"),
          qa("Does the title mention equivalent potential temperature?", "yes",
             kind="title_contains", text="equivalent potential")]),
        ("fig-03-moisture-flux", "moisture_flux_925",
         "925-hPa moisture flux divergence with the low-level wind.",
         [qa("Is 925-hPa moisture flux divergence shaded?", "yes",
             kind="has_ref", ref="mfd@925"),
          qa("Does the chart carry a shading layer?", "yes",
             kind="has_layer_kind", value="shading"),
          qa("Are 500-hPa heights contoured?", "no",
             kind="has_ref", ref="z@500"),
          qa("Is the barb thinning step 6 or finer?", "yes",
             kind="barb_step_at_most", value=6),
          qa("Does the title mention moisture flux?", "yes",
             kind="title_contains", text="moisture flux")]),
        ("fig-04-jet", "jet_200_z500",
         "Upper-level jet analysis over the 500-hPa height field.",
         [qa("Is 200-hPa wind speed shaded?", "yes", kind="has_ref", ref="wspd@200"),
          qa("Are height contours drawn every 40 gpm?", "yes",
             kind="contour_interval", ref="z@500", value=40.0),
          qa("Is sea-level pressure shown?", "no", kind="has_ref", ref="msl@0"),
          qa("Does the chart include wind barbs?", "yes",
             kind="has_layer_kind", value="barbs")]),
        ("fig-05-t2m-anomaly", "t2m_sa_msl",
         "Standardized 2-m temperature anomaly on the sea-level pressure analysis.",
         [qa("Is the 2-m temperature anomaly shaded?", "yes",
             kind="has_ref", ref="t2m_sa@0"),
          qa("Are the pressure contours drawn every 4 hPa?", "yes",
             kind="contour_interval", ref="msl@0", value=4.0),
          qa("Does the chart include wind barbs?", "no",
             kind="has_layer_kind", value="barbs"),
          qa("Does the title mention an anomaly?", "yes",
             kind="title_contains", text="anomaly"),
          qa("Did the renderer produce a vector document?", "yes",
             kind="svg_contains", text="<svg")]),
        ("fig-06-t850-advection", "t850_adv_msl",
         "850-hPa temperature advection over the surface pressure field.",
         [qa("Is 850-hPa temperature advection shaded?", "yes",
             kind="has_ref", ref="tadv@850"),
          qa("Is sea-level pressure contoured?", "yes", kind="has_ref", ref="msl@0"),
          qa("Does the title mention advection?", "yes",
             kind="title_contains", text="advection"),
          qa("Does the chart include wind barbs?", "no",
             kind="has_layer_kind", value="barbs")]),
        ("fig-07-wind10", "wind10_speed_barbs",
         "10-m wind speed and direction at the valid time.",
         [qa("Is 10-m wind speed shaded?", "yes", kind="has_ref", ref="wspd10@0"),
          qa("Are 10-m wind barbs drawn?", "yes", kind="has_ref", ref="u10@0"),
          qa("Does the chart carry contour lines?", "no",
             kind="has_layer_kind", value="contour"),
          qa("Is the barb thinning step 6 or finer?", "yes",
             kind="barb_step_at_most", value=6)]),
        ("fig-08-z500-anomaly", "z500_sa",
         "Standardized 500-hPa height anomaly with the height field overlaid.",
         [qa("Is the height anomaly shaded?", "yes", kind="has_ref", ref="z_sa@500"),
          qa("Are height contours drawn every 40 gpm?", "yes",
             kind="contour_interval", ref="z@500", value=40.0),
          qa("Does the title mention a height anomaly?", "yes",
             kind="title_contains", text="height anomaly"),
          qa("Does the chart include wind barbs?", "no",
             kind="has_layer_kind", value="barbs")]),
        ("fig-09-synoptic-structure", "synoptic_z500_msl_barbs",
         "Second structural reading of the synoptic overview chart.",
         [qa("Does the chart carry a shading layer?", "yes",
             kind="has_layer_kind", value="shading"),
          qa("Are the 850-hPa barbs present?", "yes", kind="has_ref", ref="u@850"),
          qa("Are the pressure contours drawn every 2.5 hPa?", "no",
             kind="contour_interval", ref="msl@0", value=2.5),
          qa("Is the vector document well terminated?", "yes",
             kind="svg_contains", text="</svg>"),
          qa("Is 200-hPa wind speed shown?", "no", kind="has_ref", ref="wspd@200"),
          qa("Does the title mention the 500-hPa surface?", "yes",
             kind="title_contains", text="500-hPa")]),
        ("fig-10-moisture-wind", "moisture_flux_925",
         "Wind reading of the 925-hPa moisture flux chart.",
         [qa("Are 925-hPa u barbs drawn?", "yes", kind="has_ref", ref="u@925"),
          qa("Are 925-hPa v barbs drawn?", "yes", kind="has_ref", ref="v@925"),
          qa("Does the chart carry contour lines?", "no",
             kind="has_layer_kind", value="contour"),
          qa("Does the title mention the 925-hPa level?", "yes",
             kind="title_contains", text="925")]),
    ]


def build_figure_suite(root) -> list[Path]:
    root = Path(root) / "figure"
    root.mkdir(parents=True, exist_ok=True)
    write_store(root / "fixtures/figfields", fields=_figure_fixture_fields(),
                meta={"case_id": "figfields", "valid_time": T0})
    written = []
    for case_id, template_id, requirement, qa_pairs in _figure_cases():
        doc = {"schema": FIGURE_CASE_SCHEMA, "case_id": case_id,
               "requirement": requirement, "template_id": template_id,
               "fixture": "fixtures/figfields", "qa": qa_pairs}
        path = root / f"{case_id}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", "utf-8")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# end-to-end suite

_E2E_CASES = [
    {
        "case_id": "e2e-01-coldwave-accept",
        "scenario": "coldwave_accept",
        "judge_reply": "5",
        "required_data": {
            "core": ["msl", "z"],
            "auxiliary": ["clim:t2m_change_24h", "clim:Cold High Pressure Intensity",
                          "clim:Polar Vortex Center Geopotential Height",
                          "clim:24-h Pressure Change Difference"],
            "window": {"start": T_MINUS_24H, "end": T0},
        },
        "expect": {"status": "accepted", "event": "ColdWave", "cycles": 1,
                   "memory": 0,
                   "scores": {"hypothesis": 4, "data": 5, "figure": 5, "report": 5}},
    },
    {
        "case_id": "e2e-02-rainstorm-replan",
        "scenario": "rainstorm_replan",
        "judge_reply": "4",
        "required_data": {
            "core": ["u", "v", "theta", "t", "sounding:sounding"],
            "auxiliary": ["clim:precip_24h", "clim:Low-Level Divergence Extrema",
                          "clim:Positive Vorticity", "clim:High-Level Convergence Extrema",
                          "clim:Vertical Wind Shear",
                          "clim:Frontogenesis Function Center Value", "clim:CAPE",
                          "clim:Equiv. Potential Temp Diff (850-500hPa)",
                          "clim:Warm Advection Center Intensity"],
            "window": {"start": T0, "end": T0},
        },
        "expect": {"status": "accepted", "event": "Rainstorm", "cycles": 2,
                   "memory": 1,
                   "scores": {"hypothesis": 4, "data": 5, "figure": 5, "report": 4}},
    },
    {
        "case_id": "e2e-03-heatwave-exhaust",
        "scenario": "heatwave_exhaust",
        "judge_reply": "2",
        "required_data": {
            "core": ["z", "msl", "w", "t", "q"],
            "auxiliary": ["clim:t2m_max", "clim:500hPa Geopotential Height",
                          "clim:Surface Low-Pressure", "clim:Maximum Vertical Velocity",
                          "clim:Temp Standardized Anomaly (SA)", "clim:Temperature",
                          "clim:Average Relative Humidity", "clim:Specific Humidity"],
            "window": {"start": T0, "end": T0},
        },
        "expect": {"status": "exhausted", "event": "HeatWave", "cycles": 3,
                   "memory": 3,
                   "scores": {"hypothesis": 5, "data": 5, "report": 2}},
    },
    {
        "case_id": "e2e-04-gale-accept",
        "scenario": "gale_accept",
        "judge_reply": "5",
        "required_data": {
            "core": ["u", "v", "msl"],
            "auxiliary": ["clim:wind10_max", "clim:Positive Vorticity",
                          "clim:Jet Intensity", "clim:Surface Wind Speed",
                          "clim:Vertical Wind Shear",
                          "clim:24-h Pressure Change Difference"],
            "window": {"start": T_MINUS_24H, "end": T0},
        },
        "expect": {"status": "accepted", "event": "Gale", "cycles": 1,
                   "memory": 0,
                   "scores": {"hypothesis": 4, "data": 5, "figure": 5, "report": 5}},
    },
    {
        "case_id": "e2e-05-rainstorm-moisture",
        "scenario": "rainstorm_moisture",
        "judge_reply": "4",
        "required_data": {
            "core": ["u", "v", "theta", "t", "q", "sounding:sounding"],
            "auxiliary": ["clim:precip_24h", "clim:Low-Level Divergence Extrema",
                          "clim:Positive Vorticity", "clim:High-Level Convergence Extrema",
                          "clim:Vertical Wind Shear",
                          "clim:Frontogenesis Function Center Value", "clim:CAPE",
                          "clim:Equiv. Potential Temp Diff (850-500hPa)",
                          "clim:Warm Advection Center Intensity",
                          "clim:Precipitable Water (PWAT)",
                          "clim:Water Vapor Flux Convergence Intensity",
                          "clim:Moisture Flux Divergence",
                          "clim:Average Relative Humidity"],
            "window": {"start": T0, "end": T0},
        },
        "expect": {"status": "accepted", "event": "Rainstorm", "cycles": 3,
                   "memory": 2,
                   "scores": {"hypothesis": 5, "data": 5, "figure": 5, "report": 4}},
    },
]


def build_e2e_suite(root) -> list[Path]:
    from ..synth import scenario_task
    root = Path(root) / "e2e"
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for doc in _E2E_CASES:
        doc = {"schema": SCENARIO_CASE_SCHEMA,
               "task": scenario_task(doc["scenario"]), **doc}
        path = root / f"{doc['case_id']}.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", "utf-8")
        written.append(path)
    return written


def build_all(root) -> dict[str, list[Path]]:
    out = {"index": build_index_suite(root),
           "figure": build_figure_suite(root),
           "e2e": build_e2e_suite(root)}
    for paths in out.values():
        for path in paths:
            load_case(path)        # every written case must parse back
    return out
